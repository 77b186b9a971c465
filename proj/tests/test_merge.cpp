#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "distagg/error.hpp"
#include "distagg/merge.hpp"
#include "distagg/rng.hpp"
#include "oracles.hpp"

using namespace distagg;

TEST_CASE("weighted median matches sorting oracle") {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    std::vector<std::pair<double, double>> vw;
    const std::size_t n = 1 + uniform_index(rng, 9);
    for (std::size_t i = 0; i < n; ++i) vw.emplace_back(uniform_index(rng, 6), 0.1 + uniform01(rng));
    CHECK(weighted_median(vw) == oracle::weighted_median(vw));
  }
  CHECK(weighted_median({{1, 1}, {2, 1}, {3, 1}}) == 2);
  CHECK(weighted_median({{1, 1}, {2, 1}}) == 1);
  CHECK(weighted_mean({{1, 1}, {4, 2}}) == doctest::Approx(3.0));
}

TEST_CASE("round trip of single-object labels") {
  Rng rng(11);
  int checked = 0;
  for (auto kind : {TaskKind::number, TaskKind::vector, TaskKind::ranking, TaskKind::span, TaskKind::box,
                    TaskKind::keypoint}) {
    for (int t = 0; t < 200; ++t) {
      Label l = oracle::random_label(rng, kind);
      if (is_multi_object(kind)) {
        auto parts = split_objects(l);
        if (parts.empty()) continue;
        l = parts.front();
      }
      PrimitiveBundle b = decompose(l);
      MergedPrimitives m{b.kind, b.values, b.flags, b.tags, 0};
      if (kind == TaskKind::ranking) m.length = std::get<Ranking>(l).elements.size();
      CHECK(recompose(m) == l);
      CHECK(dmr({l}) == l);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("ranking merge is mean rank with k+1 for missing") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<Label> labels;
    std::vector<double> w;
    const std::size_t n = 2 + uniform_index(rng, 4);
    for (std::size_t i = 0; i < n; ++i) {
      labels.push_back(oracle::random_label(rng, TaskKind::ranking));
      w.push_back(0.5 + uniform01(rng));
    }
    // oracle: weighted mean rank, ties by id, longest list length
    std::set<std::string> all;
    std::size_t len = 0;
    for (auto& l : labels) {
      const auto& e = std::get<Ranking>(l).elements;
      all.insert(e.begin(), e.end());
      len = std::max(len, e.size());
    }
    std::vector<std::pair<double, std::string>> mean;
    double wt = 0.0;
    for (double x : w) wt += x;
    for (const auto& id : all) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& e = std::get<Ranking>(labels[i]).elements;
        auto it = std::find(e.begin(), e.end(), id);
        s += w[i] * double(it == e.end() ? e.size() + 1 : std::size_t(it - e.begin()) + 1);
      }
      mean.emplace_back(s / wt, id);
    }
    std::sort(mean.begin(), mean.end(), [](const auto& a, const auto& b) {
      if (std::abs(a.first - b.first) > 1e-9) return a.first < b.first;
      return a.second < b.second;
    });
    Ranking expect;
    for (std::size_t i = 0; i < len; ++i) expect.elements.push_back(mean[i].second);
    CHECK(std::get<Ranking>(dmr(labels, w, Statistic::mean)) == expect);
  }
}

TEST_CASE("span merge rounds, boxes merge per coordinate") {
  SpanSet a{{Span{2, 7, "x"}}}, b{{Span{3, 8, "x"}}}, c{{Span{2, 8, "y"}}};
  auto m = std::get<SpanSet>(dmr({a, b, c}, {}, Statistic::mean));
  REQUIRE(m.spans.size() == 1);
  CHECK(m.spans[0].start == 2);  // 7/3
  CHECK(m.spans[0].end == 8);    // 23/3
  CHECK(m.spans[0].cls == std::string("x"));
  CHECK(std::get<SpanSet>(dmr({a, c}, {1.0, 1.0})).spans[0].cls == std::string("x"));

  BoxSet b1{{Box{0, 0, 10, 10}}}, b2{{Box{2, 2, 12, 12}}}, b3{{Box{100, 100, 110, 110}}};
  auto mb = std::get<BoxSet>(dmr({b1, b2, b3}));
  CHECK(mb.boxes[0] == Box{2, 2, 12, 12});
}

TEST_CASE("keypoint visibility by weighted majority") {
  Skeleton s1{{Vertex{1, 1, true}, Vertex{0, 0, false}}, 10};
  Skeleton s2{{Vertex{3, 3, true}, Vertex{5, 5, true}}, 20};
  Skeleton s3{{Vertex{0, 0, false}, Vertex{0, 0, false}}, 30};
  auto m = std::get<KeypointSet>(dmr({KeypointSet{{s1}}, KeypointSet{{s2}}, KeypointSet{{s3}}}, {}, Statistic::mean));
  REQUIRE(m.skeletons.size() == 1);
  CHECK(m.skeletons[0].vertices[0] == Vertex{2, 2, true});
  CHECK_FALSE(m.skeletons[0].vertices[1].visible);
  CHECK(m.skeletons[0].scale == doctest::Approx(20));
  auto w = std::get<KeypointSet>(dmr({KeypointSet{{s1}}, KeypointSet{{s2}}, KeypointSet{{s3}}}, {1, 5, 1}));
  CHECK(w.skeletons[0].vertices[1] == Vertex{5, 5, true});
}

TEST_CASE("merge errors") {
  CHECK_THROWS_AS(dmr({Category{"a"}, Category{"b"}}), DataError);
  CHECK_THROWS_AS(dmr({BoxSet{}, BoxSet{}}), DataError);
  CHECK_THROWS_AS(dmr({Number{1}, Number{2}}, {1.0, -1.0}), ConfigError);
  // two disjoint span shapes whose median start lands past the median end
  SpanSet a{{Span{0, 1, std::nullopt}}}, b{{Span{5, 6, std::nullopt}}};
  CHECK_NOTHROW(dmr({a, b}));
  MergedPrimitives bad;
  bad.kind = TaskKind::box;
  bad.values = {{"x1", 5}, {"y1", 0}, {"x2", 5}, {"y2", 4}};
  CHECK_THROWS_AS(recompose(bad), NumericError);
  bad.values.erase("y2");
  CHECK_THROWS_WITH_AS(recompose(bad), doctest::Contains("y2"), DataError);
}
