#include "distagg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "distagg/dataset.hpp"
#include "distagg/error.hpp"
#include "distagg/rng.hpp"

namespace distagg {

double kendall_distance(const Ranking& a, const Ranking& b, std::size_t universe_size) {
  std::unordered_map<std::string, std::size_t> pos_a, pos_b;
  for (std::size_t i = 0; i < a.elements.size(); ++i) {
    if (!pos_a.emplace(a.elements[i], i).second) {
      throw MetricError("kendall: duplicate element '" + a.elements[i] + "'");
    }
  }
  for (std::size_t i = 0; i < b.elements.size(); ++i) {
    if (!pos_b.emplace(b.elements[i], i).second) {
      throw MetricError("kendall: duplicate element '" + b.elements[i] + "'");
    }
  }

  std::vector<std::string> uni(a.elements);
  for (const auto& e : b.elements) {
    if (!pos_a.count(e)) uni.push_back(e);
  }
  const std::size_t listed = uni.size();
  const std::size_t phantoms = universe_size > listed ? universe_size - listed : 0;
  const double n = static_cast<double>(listed + phantoms);

  // Unlisted elements share rank == list length (tied for last place).
  auto rank = [](const auto& pos, std::size_t len, const std::string& e) {
    auto it = pos.find(e);
    return it == pos.end() ? len : it->second;
  };
  std::vector<std::size_t> ra(listed), rb(listed);
  for (std::size_t i = 0; i < listed; ++i) {
    ra[i] = rank(pos_a, a.elements.size(), uni[i]);
    rb[i] = rank(pos_b, b.elements.size(), uni[i]);
  }

  double concordant = 0, discordant = 0, tied_a = 0, tied_b = 0;
  for (std::size_t i = 0; i < listed; ++i) {
    for (std::size_t j = i + 1; j < listed; ++j) {
      const bool ta = ra[i] == ra[j];
      const bool tb = rb[i] == rb[j];
      if (ta) ++tied_a;
      if (tb) ++tied_b;
      if (ta || tb) continue;
      if ((ra[i] < ra[j]) == (rb[i] < rb[j])) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  if (phantoms > 0) {
    const double m = static_cast<double>(phantoms);
    const double phantom_pairs = m * (m - 1) / 2;
    tied_a += phantom_pairs;
    tied_b += phantom_pairs;
    for (std::size_t i = 0; i < listed; ++i) {
      const bool in_a = ra[i] < a.elements.size();
      const bool in_b = rb[i] < b.elements.size();
      if (in_a && in_b) {
        concordant += m;
      } else {
        if (!in_a) tied_a += m;
        if (!in_b) tied_b += m;
      }
    }
  }

  const double total = n * (n - 1) / 2;
  const double denom = std::sqrt((total - tied_a) * (total - tied_b));
  double tau;
  if (denom <= 0.0) {
    tau = a == b ? 1.0 : 0.0;
  } else {
    tau = (concordant - discordant) / denom;
  }
  return std::clamp(1.0 - tau, 0.0, 2.0);
}

namespace {

std::int64_t overlap(const Span& a, const Span& b) {
  if (a.cls && b.cls && *a.cls != *b.cls) return 0;
  return std::max<std::int64_t>(0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

// Mean over `from` spans of best overlap against `to`, normalized by the
// length of the `from` span.
double mean_best_overlap(const std::vector<Span>& from, const std::vector<Span>& to) {
  double sum = 0.0;
  for (const auto& s : from) {
    std::int64_t best = 0;
    for (const auto& t : to) best = std::max(best, overlap(s, t));
    sum += static_cast<double>(best) / static_cast<double>(s.end - s.start);
  }
  return sum / static_cast<double>(from.size());
}

template <typename T, typename Score>
double best_match_quality(const std::vector<T>& labels, const std::vector<const T*>& refs,
                          Score&& score) {
  double p = 0.0;
  for (const auto& l : labels) {
    double best = 0.0;
    for (const T* r : refs) best = std::max(best, score(l, *r));
    p += best;
  }
  double r = 0.0;
  for (const T* g : refs) {
    double best = 0.0;
    for (const auto& l : labels) best = std::max(best, score(l, *g));
    r += best;
  }
  return 0.5 * (p / static_cast<double>(labels.size()) + r / static_cast<double>(refs.size()));
}

using Ngram = std::vector<std::string>;

std::map<Ngram, int> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<Ngram, int> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

double span_f1_distance(const SpanSet& a, const SpanSet& b) {
  if (a.spans.empty() && b.spans.empty()) return 0.0;
  if (a.spans.empty() || b.spans.empty()) return 1.0;
  const double precision = mean_best_overlap(a.spans, b.spans);
  const double recall = mean_best_overlap(b.spans, a.spans);
  if (precision + recall <= 0.0) return 1.0;
  return 1.0 - 2.0 * precision * recall / (precision + recall);
}

double box_iou(const Box& a, const Box& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double iou_set_distance(const BoxSet& a, const BoxSet& b) {
  if (a.boxes.empty() && b.boxes.empty()) return 0.0;
  if (a.boxes.empty() || b.boxes.empty()) return 1.0;
  std::vector<const Box*> refs;
  for (const auto& g : b.boxes) refs.push_back(&g);
  return 1.0 - best_match_quality(a.boxes, refs, box_iou);
}

std::optional<double> oks(const Skeleton& label, const Skeleton& ref) {
  if (label.vertices.size() != ref.vertices.size()) {
    throw MetricError("oks: skeleton schemas differ (" + std::to_string(label.vertices.size()) +
                      " vs " + std::to_string(ref.vertices.size()) + " vertices)");
  }
  double sum = 0.0;
  int visible = 0;
  const double two_s2 = 2.0 * ref.scale * ref.scale;
  for (std::size_t i = 0; i < ref.vertices.size(); ++i) {
    const auto& g = ref.vertices[i];
    if (!g.visible) continue;
    ++visible;
    const auto& v = label.vertices[i];
    if (!v.visible) continue;
    const double dx = v.x - g.x, dy = v.y - g.y;
    sum += std::exp(-(dx * dx + dy * dy) / two_s2);
  }
  if (visible == 0) return std::nullopt;
  return sum / visible;
}

double oks_set_distance(const KeypointSet& a, const KeypointSet& b) {
  std::vector<const Skeleton*> refs;
  for (const auto& g : b.skeletons) {
    if (std::any_of(g.vertices.begin(), g.vertices.end(), [](const Vertex& v) { return v.visible; })) {
      refs.push_back(&g);
    }
  }
  if (a.skeletons.empty() && refs.empty()) return 0.0;
  if (a.skeletons.empty() || refs.empty()) return 1.0;
  return 1.0 - best_match_quality(a.skeletons, refs, [](const Skeleton& l, const Skeleton& g) {
           return oks(l, g).value_or(0.0);
         });
}

double gleu(const TokenSequence& hyp, const TokenSequence& ref) {
  long matches = 0, hyp_total = 0, ref_total = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto h = ngram_counts(hyp.tokens, n);
    auto r = ngram_counts(ref.tokens, n);
    for (const auto& [gram, c] : h) {
      hyp_total += c;
      auto it = r.find(gram);
      if (it != r.end()) matches += std::min(c, it->second);
    }
    for (const auto& [gram, c] : r) ref_total += c;
  }
  if (hyp_total == 0 || ref_total == 0) return 0.0;
  return std::min(static_cast<double>(matches) / static_cast<double>(hyp_total),
                  static_cast<double>(matches) / static_cast<double>(ref_total));
}

double gleu_distance(const TokenSequence& a, const TokenSequence& b) {
  if (a == b) return 0.0;
  if (a.tokens.empty() || b.tokens.empty()) return 1.0;
  return 1.0 - 0.5 * (gleu(a, b) + gleu(b, a));
}

double exact_match_distance(const Category& a, const Category& b) {
  return a.symbol == b.symbol ? 0.0 : 1.0;
}

double abs_distance(const Number& a, const Number& b) { return std::abs(a.value - b.value); }

double rmse_distance(const Vector& a, const Vector& b) {
  if (a.values.size() != b.values.size()) {
    throw MetricError("rmse: dimension mismatch (" + std::to_string(a.values.size()) + " vs " +
                      std::to_string(b.values.size()) + ")");
  }
  if (a.values.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.values.size()));
}

// ---------------------------------------------------------------------------

Metric::Metric(MetricDescriptor descriptor, DistanceFn fn)
    : desc_(std::move(descriptor)), fn_(std::move(fn)) {}

double Metric::distance(const Label& a, const Label& b) const {
  if (kind_of(a) != desc_.variant || kind_of(b) != desc_.variant) {
    throw MetricError("metric '" + desc_.name + "' expects variant '" +
                      std::string(to_string(desc_.variant)) + "', got '" +
                      std::string(to_string(kind_of(kind_of(a) != desc_.variant ? a : b))) + "'");
  }
  double d = fn_(a, b);
  if (!desc_.is_symmetric) d = 0.5 * (d + fn_(b, a));
  if (std::isnan(d) || d < 0.0) {
    throw MetricError("metric '" + desc_.name + "' returned invalid distance " + std::to_string(d));
  }
  return d;
}

double Metric::evaluate(const Label& result, const Label& gold) const {
  if (kind_of(result) != desc_.variant || kind_of(gold) != desc_.variant) {
    throw MetricError("metric '" + desc_.name + "' cannot evaluate variant '" +
                      std::string(to_string(kind_of(result))) + "'");
  }
  const double d = fn_(result, gold);
  return desc_.quality_complement ? 1.0 - d : d;
}

namespace {

template <typename T, typename F>
DistanceFn typed(F f) {
  return [f](const Label& a, const Label& b) { return f(std::get<T>(a), std::get<T>(b)); };
}

template <typename T, typename F>
MetricRegistry::Factory fixed(MetricDescriptor desc, F f) {
  return [desc, f](const std::string& param) {
    if (!param.empty()) throw ConfigError("metric '" + desc.name + "' takes no parameter");
    return Metric(desc, typed<T>(f));
  };
}

}  // namespace

MetricRegistry::MetricRegistry() {
  add("exact", fixed<Category>({"exact", TaskKind::category, true, true}, exact_match_distance));
  add("abs", fixed<Number>({"abs", TaskKind::number, true, false}, abs_distance));
  add("rmse", fixed<Vector>({"rmse", TaskKind::vector, true, false}, rmse_distance));
  add("gleu", fixed<TokenSequence>({"gleu", TaskKind::tokens, false, true}, gleu_distance));
  add("span_f1", fixed<SpanSet>({"span_f1", TaskKind::span, true, true}, span_f1_distance));
  add("iou", fixed<BoxSet>({"iou", TaskKind::box, true, true}, iou_set_distance));
  add("oks", fixed<KeypointSet>({"oks", TaskKind::keypoint, false, true}, oks_set_distance));
  add("kendall", [](const std::string& param) {
    std::size_t universe = 0;
    if (!param.empty()) {
      try {
        universe = std::stoul(param);
      } catch (const std::exception&) {
        throw ConfigError("kendall: universe size must be an integer, got '" + param + "'");
      }
    }
    std::string name = param.empty() ? "kendall" : "kendall:" + param;
    // Values span [0, 2], so this is not a plain quality complement; the
    // evaluation score is reported as tau = 1 - distance regardless.
    return Metric({name, TaskKind::ranking, true, true}, typed<Ranking>([universe](const Ranking& a, const Ranking& b) {
                    return kendall_distance(a, b, universe);
                  }));
  });
}

MetricRegistry& MetricRegistry::global() {
  static MetricRegistry registry;
  return registry;
}

void MetricRegistry::add(const std::string& name, Factory factory) {
  if (!factories_.emplace(name, std::move(factory)).second) {
    throw ConfigError("metric '" + name + "' is already registered");
  }
}

void MetricRegistry::add(Metric metric) {
  const std::string name = metric.name();
  add(name, [metric](const std::string& param) {
    if (!param.empty()) throw ConfigError("metric '" + metric.name() + "' takes no parameter");
    return metric;
  });
}

Metric MetricRegistry::make(const std::string& text) const {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string param = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto it = factories_.find(name);
  if (it == factories_.end()) throw ConfigError("unknown metric '" + name + "'");
  return it->second(param);
}

bool MetricRegistry::contains(const std::string& name) const { return factories_.count(name) > 0; }

std::vector<std::string> MetricRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, f] : factories_) out.push_back(name);
  return out;
}

Metric make_metric(const std::string& text) { return MetricRegistry::global().make(text); }

std::string default_metric_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::category: return "exact";
    case TaskKind::number: return "abs";
    case TaskKind::vector: return "rmse";
    case TaskKind::ranking: return "kendall";
    case TaskKind::tokens: return "gleu";
    case TaskKind::span: return "span_f1";
    case TaskKind::box: return "iou";
    case TaskKind::keypoint: return "oks";
  }
  return "exact";
}

double krippendorff_alpha(const AnnotationDataset& dataset, const Metric& metric,
                          const AlphaOptions& options) {
  // Pairable values: annotations on items with at least two annotations.
  std::vector<const Label*> values;
  double observed = 0.0;
  std::size_t pairable_items = 0;
  for (std::size_t i = 0; i < dataset.item_count(); ++i) {
    auto anns = dataset.annotations_of(i);
    const std::size_t m = anns.size();
    if (m < 2) continue;
    ++pairable_items;
    double within = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      values.push_back(&anns[a].label);
      for (std::size_t b = a + 1; b < m; ++b) {
        const double d = metric.distance(anns[a].label, anns[b].label);
        within += d * d;
      }
    }
    observed += 2.0 * within / static_cast<double>(m - 1);
  }
  if (pairable_items < 2) {
    throw DataError("krippendorff_alpha needs at least 2 items with 2 or more annotations");
  }
  const std::size_t n = values.size();
  observed /= static_cast<double>(n);

  const double all_pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  double expected = 0.0;
  if (all_pairs <= static_cast<double>(options.max_expected_pairs)) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        const double d = metric.distance(*values[a], *values[b]);
        expected += d * d;
      }
    }
    expected /= all_pairs;
  } else {
    Rng rng(options.seed);
    for (std::size_t s = 0; s < options.max_expected_pairs; ++s) {
      const std::size_t a = static_cast<std::size_t>(uniform_index(rng, n));
      std::size_t b = static_cast<std::size_t>(uniform_index(rng, n));
      while (b == a) b = static_cast<std::size_t>(uniform_index(rng, n));
      const double d = metric.distance(*values[a], *values[b]);
      expected += d * d;
    }
    expected /= static_cast<double>(options.max_expected_pairs);
  }
  if (expected <= 0.0) return 1.0;
  return 1.0 - observed / expected;
}

}  // namespace distagg
