#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "distagg/json_io.hpp"
#include "distagg/label.hpp"

namespace distagg {

class AnnotationDataset;
class Metric;

struct ItemResult {
  std::string item;
  std::optional<Label> label;          // empty when the item failed
  std::optional<std::string> worker;   // selected annotator, selection methods only
  double score = std::numeric_limits<double>::quiet_NaN();  // epsilon or posterior of the choice
  std::string recipe;                  // e.g. "select:mas", "merge:median", "degraded"
  std::vector<std::string> flags;
  std::string error;
};

struct AggregationResult {
  std::string method;
  TaskKind task = TaskKind::category;
  std::vector<ItemResult> items;
  /// Items whose gold fed the model (honeypots); excluded from evaluation.
  std::vector<std::string> honeypots;
  json fit = json::object();     // fitted parameters
  json scores = json::array();   // per-label epsilon table
  std::size_t failed_items() const;
};

struct Evaluation {
  std::vector<std::pair<std::string, double>> per_item;
  double mean = 0.0;
  std::size_t missing_gold = 0;   // items skipped for lack of gold
  std::size_t excluded = 0;       // honeypots
  std::size_t unscored = 0;       // failed items
};

json result_to_json(const AggregationResult& result);
/// Inverse of result_to_json; throws DataError on malformed input.
AggregationResult result_from_json(const json& j);

json evaluation_to_json(const Evaluation& ev);

/// Scores each result against the dataset's gold with `metric.evaluate`.
/// Throws DataError("no gold items") when nothing is evaluable.
Evaluation evaluate_against_gold(const AggregationResult& result, const AnnotationDataset& dataset,
                                 const Metric& metric);

}  // namespace distagg
