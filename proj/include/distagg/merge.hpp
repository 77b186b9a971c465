#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "distagg/label.hpp"

namespace distagg {

enum class Statistic { median, mean };
std::string_view to_string(Statistic s);
Statistic parse_statistic(std::string_view name);

/// Keyed numeric primitives of one label. Continuous values are merged by the
/// chosen statistic; flags (keypoint visibility) and tags (span class) by
/// weighted majority.
struct PrimitiveBundle {
  TaskKind kind = TaskKind::number;
  std::map<std::string, double> values;
  std::map<std::string, bool> flags;
  std::map<std::string, std::string> tags;
};

struct MergedPrimitives {
  TaskKind kind = TaskKind::number;
  std::map<std::string, double> values;
  std::map<std::string, bool> flags;
  std::map<std::string, std::string> tags;
  std::size_t length = 0;  // rankings: longest input list
};

/// Throws DataError for variants that cannot be merged (category, tokens)
/// and for multi-object labels holding other than exactly one object.
PrimitiveBundle decompose(const Label& label);
std::vector<PrimitiveBundle> decompose(const std::vector<Label>& labels);

/// Smallest value whose cumulative weight reaches half the total.
double weighted_median(std::vector<std::pair<double, double>> value_weight);
double weighted_mean(const std::vector<std::pair<double, double>>& value_weight);

/// `weights` empty means all 1. Rankings: an element missing from a voter's
/// list takes rank k + 1 for that voter (k = its list length).
MergedPrimitives merge_primitives(const std::vector<PrimitiveBundle>& bundles,
                                  const std::vector<double>& weights, Statistic statistic);

/// Throws DataError naming missing keys, NumericError("degenerate merge") for
/// boxes/spans that collapse.
Label recompose(const MergedPrimitives& merged);

/// decompose, merge_primitives, recompose.
Label dmr(const std::vector<Label>& labels, const std::vector<double>& weights = {},
          Statistic statistic = Statistic::median);

}  // namespace distagg
