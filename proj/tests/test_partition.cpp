#include <doctest.h>

#include <algorithm>
#include <limits>

#include "distagg/error.hpp"
#include "distagg/metrics.hpp"
#include "distagg/partition.hpp"
#include "distagg/rng.hpp"
#include "distagg/simulate.hpp"
#include "oracles.hpp"

using namespace distagg;

namespace {

AnnotationDataset boxes(const std::vector<std::pair<std::string, BoxSet>>& rows) {
  AnnotationDataset::Builder b(TaskKind::box);
  for (const auto& [w, l] : rows) b.add("i1", w, l);
  return std::move(b).build();
}

}  // namespace

TEST_CASE("two annotators, same two boxes") {
  const Metric m = make_metric("iou");
  BoxSet s{{Box{0, 0, 10, 10}, Box{50, 50, 60, 60}}};
  auto p = partition_cluster({s, s}, m);
  REQUIRE(p.partitions.size() == 2);
  CHECK(p.partitions[0].size() == 2);
  CHECK(p.partitions[1].size() == 2);
  CHECK(p.outliers.empty());
  CHECK_FALSE(p.no_consensus);
}

TEST_CASE("lone annotator objects are all outliers") {
  const Metric m = make_metric("iou");
  BoxSet s{{Box{0, 0, 10, 10}, Box{20, 20, 30, 30}, Box{50, 50, 60, 60}}};
  auto p = partition_cluster({s, BoxSet{}, BoxSet{}}, m);
  CHECK(p.partitions.empty());
  CHECK(p.outliers.size() == 3);
  CHECK(p.no_consensus);
}

TEST_CASE("cluster count respects the per-annotator bound") {
  const Metric m = make_metric("iou");
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    std::vector<Label> labels;
    std::size_t cmax = 0, total = 0;
    const std::size_t n = 1 + uniform_index(rng, 5);
    for (std::size_t u = 0; u < n; ++u) {
      labels.push_back(oracle::random_label(rng, TaskKind::box));
      cmax = std::max(cmax, object_count(labels.back()));
      total += object_count(labels.back());
    }
    auto p = partition_cluster(labels, m);
    CHECK(p.partitions.size() <= cmax);
    std::size_t assigned = p.outliers.size();
    for (const auto& part : p.partitions) {
      CHECK(part.size() >= 2);
      assigned += part.size();
    }
    CHECK(assigned == total);
  }
}

TEST_CASE("oracle partition is exhaustive nearest-gold search") {
  const Metric m = make_metric("iou");
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    std::vector<Label> labels;
    for (int u = 0; u < 3; ++u) labels.push_back(oracle::random_label(rng, TaskKind::box));
    Label gold = oracle::random_label(rng, TaskKind::box);
    auto golds = split_objects(gold);
    auto p = partition_oracle(labels, gold, m);
    CHECK(p.partitions.size() == golds.size());
    if (golds.empty()) continue;
    for (std::size_t a = 0; a < labels.size(); ++a) {
      auto objs = split_objects(labels[a]);
      for (std::size_t o = 0; o < objs.size(); ++o) {
        std::size_t best = 0;
        for (std::size_t g = 1; g < golds.size(); ++g) {
          if (m.distance(objs[o], golds[g]) < m.distance(objs[o], golds[best])) best = g;
        }
        const auto& part = p.partitions[best];
        CHECK(std::find(part.begin(), part.end(), ObjectRef{a, o}) != part.end());
      }
    }
  }
  // equidistant: both golds disjoint from the label -> first gold
  auto p = partition_oracle({BoxSet{{Box{100, 100, 110, 110}}}}, BoxSet{{Box{0, 0, 1, 1}, Box{5, 5, 6, 6}}}, m);
  CHECK(p.partitions[0].size() == 1);
}

TEST_CASE("rand index") {
  ItemPartition a{{{{0, 0}, {1, 0}}, {{0, 1}, {1, 1}}}, {}, false};
  CHECK(rand_index(a, a) == 1.0);
  ItemPartition b{{{{0, 0}, {1, 1}}, {{0, 1}, {1, 0}}}, {}, false};
  CHECK(rand_index(a, b) == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("psr picks the right object per partition") {
  // A is right on object 1, B on object 2, C right on both
  BoxSet good1{{Box{0, 0, 10, 10}}}, good2{{Box{50, 50, 60, 60}}};
  BoxSet a{{Box{0, 0, 10, 10}, Box{53, 53, 63, 63}}};
  BoxSet b{{Box{2, 2, 12, 12}, Box{50, 50, 60, 60}}};
  BoxSet c{{Box{0, 0, 10, 10}, Box{50, 50, 60, 60}}};
  auto ds = boxes({{"A", a}, {"B", b}, {"C", c}});
  const Metric m = make_metric("iou");
  for (std::string inner : {"sad", "bau", "mas", "madd"}) {
    PartitionOptions opt;
    opt.inner = inner;
    auto res = psr(ds, m, opt);
    REQUIRE(res.items.size() == 1);
    REQUIRE(res.items[0].label);
    CHECK(*res.items[0].label == Label(c));
  }
  auto same = boxes({{"A", c}, {"B", c}});
  CHECK(*psr(same, m, {}).items[0].label == Label(c));
  PartitionOptions opt;
  opt.inner = "bogus";
  CHECK_THROWS_AS(psr(ds, m, opt), ConfigError);
}

TEST_CASE("psr output objects come from annotators") {
  SimConfig cfg;
  cfg.task = SimTask::keypoints;
  cfg.n_items = 20;
  cfg.seed = 3;
  auto sim = simulate(cfg);
  const Metric m = make_metric(sim_metric(SimTask::keypoints));
  PartitionOptions opt;
  opt.inner = "sad";
  auto res = psr(sim.dataset, m, opt);
  for (std::size_t i = 0; i < res.items.size(); ++i) {
    if (!res.items[i].label) continue;
    std::vector<Label> pool;
    for (const auto& a : sim.dataset.annotations_of(i)) {
      for (auto& o : split_objects(a.label)) pool.push_back(o);
    }
    for (const auto& o : split_objects(*res.items[i].label)) {
      CHECK(std::find(pool.begin(), pool.end(), o) != pool.end());
    }
  }
}

TEST_CASE("pdmrr merges each partition") {
  BoxSet a{{Box{0, 0, 10, 10}, Box{50, 50, 60, 60}}};
  BoxSet b{{Box{2, 2, 12, 12}, Box{52, 52, 62, 62}}};
  BoxSet c{{Box{1, 1, 11, 11}, Box{51, 51, 61, 61}}};
  const Metric m = make_metric("iou");
  PartitionOptions opt;
  opt.weights_from = "none";
  auto res = pdmrr(boxes({{"A", a}, {"B", b}, {"C", c}}), m, opt);
  CHECK(*res.items[0].label == Label(c));
  auto same = pdmrr(boxes({{"A", a}, {"B", a}}), m, opt);
  CHECK(*same.items[0].label == Label(a));
  opt.weights_from = "mas";
  CHECK(pdmrr(boxes({{"A", a}, {"B", b}, {"C", c}}), m, opt).items[0].label.has_value());
}

TEST_CASE("clustered partitions agree with the oracle on simulated keypoints") {
  SimConfig cfg;
  cfg.task = SimTask::keypoints;
  cfg.n_items = 30;
  cfg.seed = 9;
  auto sim = simulate(cfg);
  const Metric m = make_metric(sim_metric(SimTask::keypoints));
  double total = 0.0;
  for (std::size_t i = 0; i < sim.dataset.item_count(); ++i) {
    std::vector<Label> labels;
    for (const auto& a : sim.dataset.annotations_of(i)) labels.push_back(a.label);
    total += rand_index(partition_cluster(labels, m), partition_oracle(labels, *sim.dataset.gold(i), m));
  }
  CHECK(total / double(sim.dataset.item_count()) >= 0.8);
}

TEST_CASE("partition pipelines need multi-object labels") {
  AnnotationDataset::Builder b(TaskKind::number);
  b.add("i", "u", Number{1}).add("i", "v", Number{2});
  auto ds = std::move(b).build();
  CHECK_THROWS_AS(psr(ds, make_metric("abs"), {}), DataError);
}
