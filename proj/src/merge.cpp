#include "distagg/merge.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "distagg/error.hpp"

namespace distagg {
namespace {

std::string vkey(std::size_t i, const char* field) { return "v" + std::to_string(i) + "." + field; }

// Index of keys shaped "<prefix><n>" or "<prefix><n>.<field>".
std::size_t key_index(const std::string& key, char prefix) {
  if (key.size() < 2 || key[0] != prefix) return SIZE_MAX;
  std::size_t n = 0, pos = 1;
  for (; pos < key.size() && std::isdigit(static_cast<unsigned char>(key[pos])); ++pos) {
    n = n * 10 + static_cast<std::size_t>(key[pos] - '0');
  }
  return pos == 1 ? SIZE_MAX : n;
}

const double& need(const MergedPrimitives& m, const std::string& key, std::vector<std::string>& missing) {
  static const double zero = 0.0;
  auto it = m.values.find(key);
  if (it == m.values.end()) {
    missing.push_back(key);
    return zero;
  }
  return it->second;
}

void throw_missing(const std::vector<std::string>& missing) {
  if (missing.empty()) return;
  std::string msg = "incomplete primitives, missing:";
  for (const auto& k : missing) msg += " " + k;
  throw DataError(msg);
}

}  // namespace

std::string_view to_string(Statistic s) { return s == Statistic::median ? "median" : "mean"; }

Statistic parse_statistic(std::string_view name) {
  if (name == "median") return Statistic::median;
  if (name == "mean") return Statistic::mean;
  throw ConfigError("unknown statistic '" + std::string(name) + "' (expected median or mean)");
}

PrimitiveBundle decompose(const Label& label) {
  PrimitiveBundle b;
  b.kind = kind_of(label);
  if (is_multi_object(b.kind) && object_count(label) != 1) {
    throw DataError("multi-object labels must be partitioned into single objects before merging (got " +
                    std::to_string(object_count(label)) + " objects)");
  }
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Number>) {
          b.values["value"] = l.value;
        } else if constexpr (std::is_same_v<T, Vector>) {
          for (std::size_t i = 0; i < l.values.size(); ++i) b.values["c" + std::to_string(i)] = l.values[i];
        } else if constexpr (std::is_same_v<T, Ranking>) {
          for (std::size_t i = 0; i < l.elements.size(); ++i) {
            b.values[l.elements[i]] = static_cast<double>(i + 1);
          }
        } else if constexpr (std::is_same_v<T, SpanSet>) {
          const auto& s = l.spans[0];
          b.values["start"] = static_cast<double>(s.start);
          b.values["end"] = static_cast<double>(s.end);
          if (s.cls) b.tags["class"] = *s.cls;
        } else if constexpr (std::is_same_v<T, BoxSet>) {
          const auto& x = l.boxes[0];
          b.values["x1"] = x.x1;
          b.values["y1"] = x.y1;
          b.values["x2"] = x.x2;
          b.values["y2"] = x.y2;
        } else if constexpr (std::is_same_v<T, KeypointSet>) {
          const auto& sk = l.skeletons[0];
          for (std::size_t i = 0; i < sk.vertices.size(); ++i) {
            const auto& v = sk.vertices[i];
            b.flags[vkey(i, "visible")] = v.visible;
            if (v.visible) {
              b.values[vkey(i, "x")] = v.x;
              b.values[vkey(i, "y")] = v.y;
            }
          }
          b.values["scale"] = sk.scale;
        } else {
          throw DataError("labels of type '" + std::string(to_string(kind_of(label))) +
                          "' are not mergeable");
        }
      },
      label);
  return b;
}

std::vector<PrimitiveBundle> decompose(const std::vector<Label>& labels) {
  std::vector<PrimitiveBundle> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(decompose(l));
  return out;
}

double weighted_median(std::vector<std::pair<double, double>> vw) {
  if (vw.empty()) throw DataError("weighted_median of no values");
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (const auto& p : vw) total += p.second;
  double cum = 0.0;
  for (const auto& [value, weight] : vw) {
    cum += weight;
    if (cum >= 0.5 * total) return value;
  }
  return vw.back().first;
}

double weighted_mean(const std::vector<std::pair<double, double>>& vw) {
  if (vw.empty()) throw DataError("weighted_mean of no values");
  double s = 0.0, w = 0.0;
  for (const auto& [value, weight] : vw) {
    s += value * weight;
    w += weight;
  }
  return s / w;
}

MergedPrimitives merge_primitives(const std::vector<PrimitiveBundle>& bundles,
                                  const std::vector<double>& weights, Statistic statistic) {
  if (bundles.empty()) throw DataError("nothing to merge");
  if (!weights.empty() && weights.size() != bundles.size()) {
    throw ConfigError("merge weights do not align with labels");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("merge weights must be positive and finite");
  }
  auto weight = [&](std::size_t b) { return weights.empty() ? 1.0 : weights[b]; };

  MergedPrimitives out;
  out.kind = bundles[0].kind;
  for (const auto& b : bundles) {
    if (b.kind != out.kind) throw DataError("cannot merge labels of different types");
  }

  std::map<std::string, std::vector<std::pair<double, double>>> pools;
  if (out.kind == TaskKind::ranking) {
    std::set<std::string> elements;
    for (const auto& b : bundles) {
      for (const auto& [e, r] : b.values) elements.insert(e);
      out.length = std::max(out.length, b.values.size());
    }
    for (std::size_t b = 0; b < bundles.size(); ++b) {
      const double last = static_cast<double>(bundles[b].values.size() + 1);
      for (const auto& e : elements) {
        auto it = bundles[b].values.find(e);
        pools[e].emplace_back(it == bundles[b].values.end() ? last : it->second, weight(b));
      }
    }
  } else {
    for (std::size_t b = 0; b < bundles.size(); ++b) {
      for (const auto& [k, v] : bundles[b].values) pools[k].emplace_back(v, weight(b));
    }
  }
  for (auto& [k, pool] : pools) {
    out.values[k] = statistic == Statistic::median ? weighted_median(std::move(pool)) : weighted_mean(pool);
  }

  std::map<std::string, std::pair<double, double>> flag_votes;  // (true, false)
  std::map<std::string, std::map<std::string, double>> tag_votes;
  for (std::size_t b = 0; b < bundles.size(); ++b) {
    for (const auto& [k, f] : bundles[b].flags) (f ? flag_votes[k].first : flag_votes[k].second) += weight(b);
    for (const auto& [k, t] : bundles[b].tags) tag_votes[k][t] += weight(b);
  }
  for (const auto& [k, v] : flag_votes) out.flags[k] = v.first >= v.second;
  for (const auto& [k, votes] : tag_votes) {
    auto best = votes.begin();
    for (auto it = votes.begin(); it != votes.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    out.tags[k] = best->first;
  }
  return out;
}

Label recompose(const MergedPrimitives& m) {
  std::vector<std::string> missing;
  switch (m.kind) {
    case TaskKind::number: {
      Number n{need(m, "value", missing)};
      throw_missing(missing);
      return n;
    }
    case TaskKind::vector: {
      std::size_t dim = 0;
      for (const auto& [k, v] : m.values) {
        const auto i = key_index(k, 'c');
        if (i == SIZE_MAX || "c" + std::to_string(i) != k) throw DataError("unexpected vector key '" + k + "'");
        dim = std::max(dim, i + 1);
      }
      Vector v;
      for (std::size_t i = 0; i < dim; ++i) v.values.push_back(need(m, "c" + std::to_string(i), missing));
      throw_missing(missing);
      return v;
    }
    case TaskKind::ranking: {
      std::vector<std::pair<double, std::string>> order;
      for (const auto& [e, r] : m.values) order.emplace_back(r, e);
      std::sort(order.begin(), order.end());
      Ranking r;
      const std::size_t len = m.length > 0 ? std::min(m.length, order.size()) : order.size();
      for (std::size_t i = 0; i < len; ++i) r.elements.push_back(order[i].second);
      return r;
    }
    case TaskKind::span: {
      const double s = need(m, "start", missing), e = need(m, "end", missing);
      throw_missing(missing);
      Span span{static_cast<std::int64_t>(std::round(s)), static_cast<std::int64_t>(std::round(e)), std::nullopt};
      if (auto it = m.tags.find("class"); it != m.tags.end()) span.cls = it->second;
      if (span.start >= span.end) throw NumericError("degenerate merge: span collapses to empty");
      return SpanSet{{span}};
    }
    case TaskKind::box: {
      Box b{need(m, "x1", missing), need(m, "y1", missing), need(m, "x2", missing), need(m, "y2", missing)};
      throw_missing(missing);
      if (!(b.x1 < b.x2) || !(b.y1 < b.y2)) throw NumericError("degenerate merge: box has no area");
      return BoxSet{{b}};
    }
    case TaskKind::keypoint: {
      std::size_t n = 0;
      for (const auto& [k, f] : m.flags) n = std::max(n, key_index(k, 'v') + 1);
      Skeleton sk;
      for (std::size_t i = 0; i < n; ++i) {
        auto f = m.flags.find(vkey(i, "visible"));
        if (f == m.flags.end()) {
          missing.push_back(vkey(i, "visible"));
          continue;
        }
        if (f->second) {
          sk.vertices.push_back(Vertex{need(m, vkey(i, "x"), missing), need(m, vkey(i, "y"), missing), true});
        } else {
          sk.vertices.push_back(Vertex{0.0, 0.0, false});
        }
      }
      sk.scale = need(m, "scale", missing);
      throw_missing(missing);
      return KeypointSet{{sk}};
    }
    default:
      throw DataError("labels of type '" + std::string(to_string(m.kind)) + "' are not mergeable");
  }
}

Label dmr(const std::vector<Label>& labels, const std::vector<double>& weights, Statistic statistic) {
  return recompose(merge_primitives(decompose(labels), weights, statistic));
}

}  // namespace distagg
