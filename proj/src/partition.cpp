#include "distagg/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "distagg/error.hpp"
#include "distagg/metrics.hpp"

namespace distagg {
namespace {

struct Objects {
  std::vector<ObjectRef> refs;
  std::vector<Label> labels;  // singleton labels aligned with refs
};

Objects collect(const std::vector<Label>& labels) {
  Objects o;
  for (std::size_t a = 0; a < labels.size(); ++a) {
    auto parts = split_objects(labels[a]);
    for (std::size_t j = 0; j < parts.size(); ++j) {
      o.refs.push_back({a, j});
      o.labels.push_back(std::move(parts[j]));
    }
  }
  return o;
}

void sort_partitions(ItemPartition& p) {
  for (auto& part : p.partitions) std::sort(part.begin(), part.end());
  std::sort(p.partitions.begin(), p.partitions.end());
  std::sort(p.outliers.begin(), p.outliers.end());
}

}  // namespace

ItemPartition partition_cluster(const std::vector<Label>& labels, const Metric& metric) {
  const Objects o = collect(labels);
  const std::size_t n = o.refs.size();
  ItemPartition out;
  if (n == 0) return out;
  std::size_t cmax = 0;
  for (const auto& l : labels) cmax = std::max(cmax, object_count(l));

  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) dist[a][b] = dist[b][a] = metric.distance(o.labels[a], o.labels[b]);
  }

  // naive average linkage: clusters as member lists, merge the closest pair
  std::vector<std::vector<std::size_t>> clusters(n);
  for (std::size_t a = 0; a < n; ++a) clusters[a] = {a};
  std::vector<std::vector<double>> link = dist;  // average distance between clusters
  std::vector<bool> alive(n, true);
  std::size_t count = n;
  while (count > cmax) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (alive[j] && link[i][j] < best) {
          best = link[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    const double si = static_cast<double>(clusters[bi].size()), sj = static_cast<double>(clusters[bj].size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == bi || k == bj) continue;
      link[bi][k] = link[k][bi] = (si * link[bi][k] + sj * link[bj][k]) / (si + sj);
    }
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    clusters[bj].clear();
    alive[bj] = false;
    --count;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!alive[i]) continue;
    if (clusters[i].size() == 1) {
      out.outliers.push_back(o.refs[clusters[i][0]]);
      continue;
    }
    std::vector<ObjectRef> part;
    for (auto m : clusters[i]) part.push_back(o.refs[m]);
    out.partitions.push_back(std::move(part));
  }
  out.no_consensus = out.partitions.empty();
  sort_partitions(out);
  return out;
}

ItemPartition partition_oracle(const std::vector<Label>& labels, const Label& gold, const Metric& metric) {
  const Objects o = collect(labels);
  const auto golds = split_objects(gold);
  ItemPartition out;
  out.partitions.resize(golds.size());
  if (golds.empty()) {
    out.outliers = o.refs;
    return out;
  }
  for (std::size_t a = 0; a < o.refs.size(); ++a) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < golds.size(); ++g) {
      const double d = metric.distance(o.labels[a], golds[g]);
      if (d < bd) {
        bd = d;
        best = g;
      }
    }
    out.partitions[best].push_back(o.refs[a]);
  }
  return out;
}

double rand_index(const ItemPartition& a, const ItemPartition& b) {
  auto groups = [](const ItemPartition& p) {
    std::map<ObjectRef, long> g;
    long id = 0;
    for (const auto& part : p.partitions) {
      for (const auto& r : part) g[r] = id;
      ++id;
    }
    for (const auto& r : p.outliers) g[r] = id++;
    return g;
  };
  const auto ga = groups(a), gb = groups(b);
  std::vector<ObjectRef> refs;
  for (const auto& [r, _] : ga) {
    if (gb.count(r)) refs.push_back(r);
  }
  if (refs.size() < 2) return 1.0;
  double agree = 0.0, total = 0.0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    for (std::size_t j = i + 1; j < refs.size(); ++j) {
      const bool same_a = ga.at(refs[i]) == ga.at(refs[j]);
      const bool same_b = gb.at(refs[i]) == gb.at(refs[j]);
      agree += same_a == same_b ? 1.0 : 0.0;
      total += 1.0;
    }
  }
  return agree / total;
}

namespace {

struct PooledPartitions {
  std::vector<ItemPartition> partitions;            // per item
  std::vector<std::vector<Label>> labels;           // per item, per annotation
  std::vector<std::vector<std::vector<Label>>> objects;  // [item][partition][member] singleton labels
  // pseudo-items with 2+ members, and where they came from
  DistanceDataset pooled;
  std::vector<std::pair<std::size_t, std::size_t>> origin;  // pooled index -> (item, partition)
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
};

PooledPartitions build_pool(const AnnotationDataset& ds, const Metric& metric, const PartitionOptions& opt) {
  if (!is_multi_object(ds.task())) {
    throw DataError("partition pipelines need multi-object labels (span, box or keypoint)");
  }
  PooledPartitions pp;
  std::vector<std::string> pseudo_ids;
  std::vector<ItemDistances> pseudo;
  for (std::size_t i = 0; i < ds.item_count(); ++i) {
    std::vector<Label> labels;
    for (const auto& a : ds.annotations_of(i)) labels.push_back(a.label);
    ItemPartition part;
    if (opt.oracle) {
      const Label* gold = ds.gold(i);
      if (!gold) throw DataError("oracle partition needs gold for item '" + ds.item_id(i) + "'");
      part = partition_oracle(labels, *gold, metric);
    } else {
      part = partition_cluster(labels, metric);
    }
    std::vector<std::vector<Label>> objs;
    for (std::size_t p = 0; p < part.partitions.size(); ++p) {
      std::vector<Label> members;
      ItemDistances d;
      for (const auto& r : part.partitions[p]) {
        members.push_back(split_objects(labels[r.annotation])[r.object]);
        d.workers.push_back(ds.annotations_of(i)[r.annotation].worker);
      }
      if (members.size() >= 2) {
        for (std::size_t a = 0; a < members.size(); ++a) {
          for (std::size_t b = a + 1; b < members.size(); ++b) {
            d.condensed.push_back(metric.distance(members[a], members[b]));
          }
        }
        d.item = pseudo.size();
        pp.index[{i, p}] = pseudo.size();
        pp.origin.emplace_back(i, p);
        pseudo_ids.push_back(ds.item_id(i) + "#" + std::to_string(p));
        pseudo.push_back(std::move(d));
      }
      objs.push_back(std::move(members));
    }
    pp.partitions.push_back(std::move(part));
    pp.labels.push_back(std::move(labels));
    pp.objects.push_back(std::move(objs));
  }
  pp.pooled = DistanceDataset(std::move(pseudo_ids), ds.worker_ids(), std::move(pseudo));
  return pp;
}

Selection inner_selection(const DistanceDataset& d, const std::string& method, const PartitionOptions& opt,
                          json& fit_out) {
  if (method == "sad") return aggregate_sad(d);
  if (method == "bau") return aggregate_bau(d);
  if (method == "mas") {
    auto fit = fit_mas(d, opt.mas);
    fit_out = {{"gamma", fit.gamma}, {"sigma", fit.sigma}, {"iterations", fit.iterations},
               {"max_iter", fit.hit_max_iter}};
    return fit.selection(d);
  }
  if (method == "madd") {
    auto fit = fit_madd(d, opt.madd);
    fit_out = {{"alpha", fit.alpha}, {"iterations", fit.iterations}, {"converged", fit.converged}};
    return fit.selection(d);
  }
  throw ConfigError("unknown inner method '" + method + "' (expected sad, bau, mas or madd)");
}

void finish_item(AggregationResult& res, const AnnotationDataset& ds, std::size_t i,
                 const ItemPartition& part, std::vector<Label> winners) {
  ItemResult r;
  r.item = ds.item_id(i);
  r.recipe = res.method;
  r.label = join_objects(ds.task(), winners);
  if (part.partitions.empty()) r.flags.push_back("empty");
  if (part.no_consensus) r.flags.push_back("no-consensus-objects");
  res.items.push_back(std::move(r));
}

}  // namespace

AggregationResult psr(const AnnotationDataset& ds, const Metric& metric, const PartitionOptions& opt) {
  const PooledPartitions pp = build_pool(ds, metric, opt);
  AggregationResult res;
  res.method = "psr-" + opt.inner + (opt.oracle ? "-oracle" : "");
  res.task = ds.task();
  Selection sel;
  if (!pp.pooled.items().empty()) sel = inner_selection(pp.pooled, opt.inner, opt, res.fit);
  for (std::size_t i = 0; i < ds.item_count(); ++i) {
    std::vector<Label> winners;
    const auto& part = pp.partitions[i];
    for (std::size_t p = 0; p < part.partitions.size(); ++p) {
      const auto& members = pp.objects[i][p];
      if (members.empty()) continue;
      auto it = pp.index.find({i, p});
      const std::size_t slot = it == pp.index.end() ? 0 : sel.chosen[it->second];
      winners.push_back(members[slot]);
    }
    finish_item(res, ds, i, part, std::move(winners));
  }
  return res;
}

AggregationResult pdmrr(const AnnotationDataset& ds, const Metric& metric, const PartitionOptions& opt) {
  const PooledPartitions pp = build_pool(ds, metric, opt);
  AggregationResult res;
  const std::string source = opt.weights_from.empty() ? opt.inner : opt.weights_from;
  res.method = "pdmrr-" + source + (opt.oracle ? "-oracle" : "");
  res.task = ds.task();
  Selection sel;
  if (source != "none" && !pp.pooled.items().empty()) sel = inner_selection(pp.pooled, source, opt, res.fit);
  for (std::size_t i = 0; i < ds.item_count(); ++i) {
    std::vector<Label> merged;
    const auto& part = pp.partitions[i];
    std::string error;
    for (std::size_t p = 0; p < part.partitions.size(); ++p) {
      const auto& members = pp.objects[i][p];
      if (members.empty()) continue;
      std::vector<double> w;
      auto it = pp.index.find({i, p});
      if (source != "none" && it != pp.index.end()) {
        for (double s : sel.scores[it->second]) {
          w.push_back(sel.higher_is_better ? madd_weight(s) : 1.0 / std::max(s, 1e-9));
        }
      }
      try {
        merged.push_back(dmr(members, w, opt.statistic));
      } catch (const Error& e) {
        error = e.what();
        break;
      }
    }
    if (!error.empty()) {
      ItemResult r;
      r.item = ds.item_id(i);
      r.recipe = res.method;
      r.error = error;
      res.items.push_back(std::move(r));
      continue;
    }
    finish_item(res, ds, i, part, std::move(merged));
  }
  return res;
}

}  // namespace distagg
