#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "distagg/label.hpp"

namespace distagg {

class AnnotationDataset;

// ---------------------------------------------------------------------------
// Task-specific distance functions. All return non-negative values and are
// pure; asymmetric ones are symmetrized by Metric::distance.

/// 1 - tau over an element universe of `universe_size` elements (0 = the union
/// of both rankings). Unlisted elements are tied for last place; tied pairs
/// count as neither concordant nor discordant and tau is normalized tau-b
/// style, so identical rankings score 0. Range [0, 2].
double kendall_distance(const Ranking& a, const Ranking& b, std::size_t universe_size = 0);

/// 1 - F1 of span-averaged token precision/recall, best overlap per span.
double span_f1_distance(const SpanSet& a, const SpanSet& b);

double box_iou(const Box& a, const Box& b);
/// 1 - mean(mean best-IoU of a against b, mean best-IoU of b against a).
double iou_set_distance(const BoxSet& a, const BoxSet& b);

/// OKS of `label` against reference skeleton `ref` with k_i = 1; nullopt when
/// the reference has no visible vertex.
std::optional<double> oks(const Skeleton& label, const Skeleton& ref);
/// 1 - mean of best-match precision and recall lists with `b` as reference.
double oks_set_distance(const KeypointSet& a, const KeypointSet& b);

/// Sentence GLEU: min(precision, recall) over pooled 1..4-gram matches.
double gleu(const TokenSequence& hypothesis, const TokenSequence& reference);
/// 1 - 0.5 (GLEU(a, b) + GLEU(b, a)).
double gleu_distance(const TokenSequence& a, const TokenSequence& b);

double exact_match_distance(const Category& a, const Category& b);
double abs_distance(const Number& a, const Number& b);
double rmse_distance(const Vector& a, const Vector& b);

// ---------------------------------------------------------------------------

using DistanceFn = std::function<double(const Label&, const Label&)>;

struct MetricDescriptor {
  std::string name;
  TaskKind variant = TaskKind::category;
  bool is_symmetric = true;
  /// distance = 1 - quality with quality in [0, 1]
  bool quality_complement = true;
};

/// A named distance over one label variant. `distance` checks the variant,
/// symmetrizes asymmetric functions and rejects NaN/negative outputs.
class Metric {
 public:
  Metric(MetricDescriptor descriptor, DistanceFn fn);

  const MetricDescriptor& descriptor() const { return desc_; }
  const std::string& name() const { return desc_.name; }
  TaskKind variant() const { return desc_.variant; }

  double distance(const Label& a, const Label& b) const;
  /// Raw one-directional output, no checks.
  double raw(const Label& a, const Label& b) const { return fn_(a, b); }

  /// Evaluation score of `result` against `gold`: 1 - distance for
  /// quality-complement metrics, otherwise the raw error (lower is better).
  double evaluate(const Label& result, const Label& gold) const;
  bool higher_is_better() const { return desc_.quality_complement; }

 private:
  MetricDescriptor desc_;
  DistanceFn fn_;
};

/// Name-addressable metrics. Names may carry one parameter after a colon,
/// e.g. "kendall:50" for a 50-element ranking universe.
class MetricRegistry {
 public:
  using Factory = std::function<Metric(const std::string& param)>;

  static MetricRegistry& global();

  void add(const std::string& name, Factory factory);
  /// Registers a fixed user-supplied metric (no parameter).
  void add(Metric metric);
  Metric make(const std::string& text) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  MetricRegistry();
  std::map<std::string, Factory> factories_;
};

/// Convenience for MetricRegistry::global().make(text).
Metric make_metric(const std::string& text);

/// Default metric name for each label variant.
std::string default_metric_name(TaskKind kind);

struct AlphaOptions {
  /// Above this many cross-label pairs the expected disagreement is estimated
  /// from a seeded random sample of this size.
  std::size_t max_expected_pairs = 400000;
  std::uint64_t seed = 0x5eed;
};

/// Krippendorff's alpha with squared metric distance as the difference
/// function. Returns 1 when expected disagreement is zero. Throws DataError
/// with fewer than 2 items holding 2+ annotations.
double krippendorff_alpha(const AnnotationDataset& dataset, const Metric& metric,
                          const AlphaOptions& options = {});

}  // namespace distagg
