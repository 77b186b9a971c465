#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "distagg/error.hpp"
#include "distagg/metrics.hpp"
#include "distagg/select.hpp"
#include "distagg/simulate.hpp"

using namespace distagg;

namespace {

SimConfig config(SimTask task, std::size_t n, std::size_t j, double r, ErrorPreset p, std::uint64_t seed) {
  SimConfig c;
  c.task = task;
  c.n_items = n;
  c.n_workers = j;
  c.r = r;
  c.preset = p;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("same seed, same bytes") {
  for (auto task : {SimTask::binary, SimTask::ranking, SimTask::keypoints}) {
    auto c = config(task, 20, 8, 0.5, ErrorPreset::uniform, 9);
    auto a = simulate(c), b = simulate(c);
    CHECK(dataset_to_jsonl(a.dataset) == dataset_to_jsonl(b.dataset));
    CHECK(gold_to_jsonl(a.dataset) == gold_to_jsonl(b.dataset));
    c.seed = 10;
    CHECK(dataset_to_jsonl(simulate(c).dataset) != dataset_to_jsonl(a.dataset));
  }
}

TEST_CASE("every item gets round(rJ) distinct workers") {
  for (auto [j, r, k] : {std::tuple{21, 0.5, 11}, std::tuple{10, 0.3, 3}, std::tuple{28, 0.4, 11}}) {
    auto sim = simulate(config(SimTask::binary, 50, j, r, ErrorPreset::uniform, 1));
    for (std::size_t i = 0; i < sim.dataset.item_count(); ++i) {
      CHECK(sim.dataset.annotations_of(i).size() == static_cast<std::size_t>(k));
    }
    CHECK(sim.dataset.gold_count() == 50);
  }
  CHECK_THROWS_AS(config(SimTask::binary, 5, 10, 0.1, ErrorPreset::uniform, 0).workers_per_item(), ConfigError);
  CHECK_THROWS_AS(config(SimTask::binary, 5, 10, 1.2, ErrorPreset::uniform, 0).workers_per_item(), ConfigError);
}

TEST_CASE("binary flip rate is half the worker error") {
  // A label is redrawn uniformly with probability sigma_u, so it differs from
  // gold with probability sigma_u / 2.
  auto sim = simulate(config(SimTask::binary, 3000, 8, 0.5, ErrorPreset::uniform, 2));
  const auto& ds = sim.dataset;
  std::vector<int> n(ds.worker_count()), flips(ds.worker_count());
  for (const auto& a : ds.annotations()) {
    ++n[a.worker];
    if (!(a.label == *ds.gold(a.item))) ++flips[a.worker];
  }
  auto sigma = worker_sigma_vector(sim);
  for (std::size_t u = 0; u < sigma.size(); ++u) {
    const double p = sigma[u] / 2;
    const double se = std::sqrt(std::max(p * (1 - p), 1e-4) / n[u]);
    CHECK(std::abs(static_cast<double>(flips[u]) / n[u] - p) <= 3 * se);
  }
}

TEST_CASE("preset means") {
  double sum = 0;
  int count = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    for (double v : worker_sigma_vector(simulate(config(SimTask::binary, 100, 20, 0.2, ErrorPreset::uniform, s)))) {
      sum += v, ++count;
      CHECK(v > 0);
      CHECK(v < 1);
    }
  }
  CHECK(count >= 200);
  CHECK(sum / count == doctest::Approx(0.5).epsilon(0.1));
  CHECK(beta_params(ErrorPreset::easy_skew) == std::pair{1.0, 3.0});
  CHECK(beta_params(ErrorPreset::difficult_skew) == std::pair{3.0, 1.0});
  CHECK(beta_params(ErrorPreset::uniform) == std::pair{1.0, 1.0});
}

TEST_CASE("easy crowd majority is nearly always right") {
  auto sim = simulate(config(SimTask::binary, 300, 14, 0.5, ErrorPreset::easy_skew, 4));
  auto mv = majority_vote(sim.dataset);
  int right = 0;
  for (std::size_t i = 0; i < mv.size(); ++i) right += std::get<Category>(*sim.dataset.gold(i)).symbol == mv[i];
  CHECK(static_cast<double>(right) / mv.size() == doctest::Approx(0.98).epsilon(0.02 / 0.98));
}

TEST_CASE("rankings") {
  auto sim = simulate(config(SimTask::ranking, 30, 8, 0.5, ErrorPreset::uniform, 5));
  for (const auto& a : sim.dataset.annotations()) {
    const auto& e = std::get<Ranking>(a.label).elements;
    CHECK(e.size() == kRankingDepth);
    CHECK(std::set<std::string>(e.begin(), e.end()).size() == kRankingDepth);
  }
  for (const auto& [item, scores] : sim.truth.element_score) {
    CHECK(scores.size() == kRankingUniverse);
    std::set<double> distinct;
    for (const auto& [e, g] : scores) distinct.insert(g);
    CHECK(distinct.size() == scores.size());
  }
  for (const auto& [item, s] : sim.truth.item_sigma) {
    CHECK(s > 0.5);
    CHECK(s < 1.5);
  }
}

TEST_CASE("keypoints") {
  auto sim = simulate(config(SimTask::keypoints, 20, 10, 0.5, ErrorPreset::uniform, 6));
  bool counts_vary = false;
  for (std::size_t i = 0; i < sim.dataset.item_count(); ++i) {
    const auto gold_n = std::get<KeypointSet>(*sim.dataset.gold(i)).skeletons.size();
    CHECK(gold_n >= 4);
    for (const auto& a : sim.dataset.annotations_of(i)) {
      counts_vary |= std::get<KeypointSet>(a.label).skeletons.size() != gold_n;
      for (const auto& sk : std::get<KeypointSet>(a.label).skeletons) CHECK(sk.vertices.size() == 17);
    }
  }
  CHECK(counts_vary);
}

TEST_CASE("truth round trip and names") {
  auto sim = simulate(config(SimTask::ranking, 5, 6, 0.5, ErrorPreset::centered, 7));
  auto back = truth_from_json(truth_to_json(sim.truth));
  CHECK(back.worker_sigma == sim.truth.worker_sigma);
  CHECK(back.item_sigma == sim.truth.item_sigma);
  CHECK(back.element_score == sim.truth.element_score);
  for (auto p : {ErrorPreset::uniform, ErrorPreset::centered, ErrorPreset::easy_skew, ErrorPreset::difficult_skew}) {
    CHECK(parse_error_preset(to_string(p)) == p);
  }
  CHECK_THROWS_AS(parse_sim_task("parse"), ConfigError);
  CHECK(make_metric(sim_metric(SimTask::binary)).variant() == TaskKind::category);
}
