#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "distagg/error.hpp"
#include "distagg/metrics.hpp"
#include "distagg/rng.hpp"
#include "distagg/select.hpp"
#include "distagg/simulate.hpp"

using namespace distagg;

namespace {

// One item whose slots are workers 0..k-1, condensed distances given.
DistanceDataset one_item(std::vector<std::string> workers, std::vector<double> condensed) {
  ItemDistances it;
  it.item = 0;
  for (std::size_t s = 0; s < workers.size(); ++s) it.workers.push_back(s);
  it.condensed = std::move(condensed);
  return DistanceDataset({"i"}, std::move(workers), {it});
}

// Random dataset: every item gets a random subset (size >= 2) of the workers
// and random distances in [0, 1].
DistanceDataset random_distances(std::uint64_t seed, std::size_t items, std::size_t workers) {
  Rng rng = make_rng(seed, "test-distances");
  std::vector<std::string> ids, wids;
  std::vector<ItemDistances> out;
  for (std::size_t w = 0; w < workers; ++w) wids.push_back("w" + std::to_string(w));
  for (std::size_t i = 0; i < items; ++i) {
    ids.push_back("i" + std::to_string(i));
    ItemDistances it;
    it.item = i;
    for (std::size_t w = 0; w < workers; ++w) {
      if (uniform01(rng) < 0.6) it.workers.push_back(w);
    }
    while (it.workers.size() < 2) {
      const auto w = uniform_index(rng, workers);
      if (std::find(it.workers.begin(), it.workers.end(), w) == it.workers.end()) it.workers.push_back(w);
    }
    std::sort(it.workers.begin(), it.workers.end());
    const std::size_t k = it.workers.size();
    for (std::size_t p = 0; p < k * (k - 1) / 2; ++p) it.condensed.push_back(uniform01(rng));
    out.push_back(std::move(it));
  }
  return DistanceDataset(ids, wids, out);
}

AnnotationDataset categories(const std::vector<std::vector<std::string>>& rows) {
  AnnotationDataset::Builder b(TaskKind::category);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t w = 0; w < rows[i].size(); ++w) {
      if (!rows[i][w].empty()) b.add("i" + std::to_string(i), "w" + std::to_string(w), Category{rows[i][w]});
    }
  }
  return std::move(b).build();
}

}  // namespace

TEST_CASE("sad averages each row of the distance matrix") {
  auto d = one_item({"1", "2", "3"}, {0.2, 0.8, 0.7});
  auto s = aggregate_sad(d);
  CHECK(s.scores[0][0] == doctest::Approx(0.50));
  CHECK(s.scores[0][1] == doctest::Approx(0.45));
  CHECK(s.scores[0][2] == doctest::Approx(0.75));
  CHECK(s.chosen[0] == 1);
}

TEST_CASE("sad on the three-translation distances") {
  auto d = one_item({"1", "2", "4"}, {0.4333, 0.8586, 0.8758});
  auto s = aggregate_sad(d);
  CHECK(s.scores[0][0] == doctest::Approx(0.64595));
  CHECK(s.scores[0][1] == doctest::Approx(0.65455));
  CHECK(s.scores[0][2] == doctest::Approx(0.8672));
  CHECK(s.chosen[0] == 0);
}

TEST_CASE("ties go to the lexicographically smallest worker") {
  // slot 0 is worker "b", slot 1 is worker "a"
  ItemDistances it{0, {1, 0}, {0.37}};
  DistanceDataset d({"i"}, {"a", "b"}, {it});
  CHECK(aggregate_sad(d).chosen[0] == 1);
  CHECK(aggregate_bau(d).chosen[0] == 1);
}

TEST_CASE("bau") {
  SUBCASE("single item equals sad") {
    auto d = one_item({"1", "2", "3", "4"}, {0.1, 0.9, 0.4, 0.3, 0.8, 0.2});
    CHECK(aggregate_bau(d).chosen == aggregate_sad(d).chosen);
  }
  SUBCASE("global means pick the better worker") {
    // A-C 0.3 on item 0; B-C 0.5 on item 1; A-B 0.3 and 0.5 ... computed below
    ItemDistances i0{0, {0, 2}, {0.2}};
    ItemDistances i1{1, {1, 2}, {0.6}};
    ItemDistances i2{2, {0, 1}, {0.4}};
    DistanceDataset d({"x", "y", "z"}, {"A", "B", "C"}, {i0, i1, i2});
    auto scores = bau_worker_scores(d);
    CHECK(scores[0] == doctest::Approx(0.3));
    CHECK(scores[1] == doctest::Approx(0.5));
    CHECK(aggregate_bau(d).chosen[2] == 0);
  }
  SUBCASE("score is the mean over every pair the worker takes part in") {
    auto d = random_distances(3, 40, 7);
    std::map<std::size_t, std::vector<double>> pool;
    for (const auto& it : d.items()) {
      for (std::size_t a = 0; a < it.size(); ++a) {
        for (std::size_t b = 0; b < it.size(); ++b) {
          if (a != b) pool[it.workers[a]].push_back(it(a, b));
        }
      }
    }
    auto scores = bau_worker_scores(d);
    for (const auto& [w, v] : pool) {
      double m = 0;
      for (double x : v) m += x;
      CHECK(scores[w] == doctest::Approx(m / v.size()));
    }
    auto sel = aggregate_bau(d);
    for (std::size_t i = 0; i < d.items().size(); ++i) CHECK(sel.chosen[i] < d.items()[i].size());
  }
}

TEST_CASE("sad selects the strict mode of categorical labels") {
  Rng rng = make_rng(11, "modes");
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t k = 3 + uniform_index(rng, 6);
    std::vector<std::string> row;
    for (std::size_t w = 0; w < k; ++w) row.push_back(std::string(1, static_cast<char>('a' + uniform_index(rng, 3))));
    std::map<std::string, int> count;
    for (const auto& s : row) ++count[s];
    int best = 0, n_best = 0;
    std::string mode;
    for (const auto& [s, c] : count) {
      if (c > best) best = c, n_best = 1, mode = s;
      else if (c == best) ++n_best;
    }
    if (n_best != 1) continue;
    auto ds = categories({row});
    auto d = build_distance_dataset(ds, make_metric("exact"));
    auto s = aggregate_sad(d);
    CHECK(std::get<Category>(ds.annotations_of(0)[s.chosen[0]].label).symbol == mode);
  }
}

TEST_CASE("mas") {
  MasConfig cfg;
  SUBCASE("consensus pair beats the far label") {
    // slots: 0 and 1 agree, 2 is far; plus a few items so worker scales exist
    auto d = one_item({"a", "b", "c"}, {0.0, 1.0, 1.0});
    auto fit = fit_mas(d, cfg);
    auto sel = fit.selection(d);
    CHECK(sel.chosen[0] != 2);
  }
  SUBCASE("identical labels get equal epsilons") {
    auto d = one_item({"a", "b"}, {0.0});
    auto fit = fit_mas(d, cfg);
    CHECK(fit.epsilon(0, 0) == doctest::Approx(fit.epsilon(0, 1)).epsilon(1e-4));
    CHECK(fit.selection(d).chosen[0] == 0);
  }
  SUBCASE("objective improves, parameters positive, fit reproducible") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto d = random_distances(100 + seed, 25, 6);
      cfg.seed = seed;
      auto fit = fit_mas(d, cfg);
      CHECK(fit.log_posterior >= fit.log_posterior_initial);
      CHECK(fit.sigma > 0);
      for (std::size_t u = 0; u < fit.gamma.size(); ++u) CHECK(fit.gamma[u] > 0);
      for (double x : fit.delta) CHECK(x > 0);
      auto again = fit_mas(d, cfg);
      CHECK(again.x == fit.x);
      CHECK(again.gamma == fit.gamma);
    }
  }
  SUBCASE("mds start") {
    cfg.init = MasInit::mds;
    auto d = random_distances(5, 25, 6);
    auto fit = fit_mas(d, cfg);
    CHECK(fit.log_posterior >= fit.log_posterior_initial);
    CHECK(parse_mas_init("mds") == MasInit::mds);
    CHECK_THROWS_AS(parse_mas_init("zeros"), ConfigError);
  }
  SUBCASE("recovers worker error on simulated binary labels") {
    SimConfig sc;
    sc.n_items = 300;
    sc.n_workers = 10;
    sc.r = 0.6;
    sc.seed = 1;
    auto sim = simulate(sc);
    auto d = build_distance_dataset(sim.dataset, make_metric(sim_metric(sc.task)));
    auto fit = fit_mas(d, cfg);
    auto sigma = worker_sigma_vector(sim);
    double mg = 0, ms = 0;
    for (std::size_t u = 0; u < sigma.size(); ++u) mg += fit.gamma[u], ms += sigma[u];
    mg /= sigma.size(), ms /= sigma.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t u = 0; u < sigma.size(); ++u) {
      sxy += (fit.gamma[u] - mg) * (sigma[u] - ms);
      sxx += (fit.gamma[u] - mg) * (fit.gamma[u] - mg);
      syy += (sigma[u] - ms) * (sigma[u] - ms);
    }
    CHECK(sxy / std::sqrt(sxx * syy) >= 0.7);
  }
}

TEST_CASE("madd") {
  SUBCASE("two identical labels split the posterior") {
    auto fit = fit_madd(one_item({"a", "b"}, {0.0}));
    CHECK(fit.posterior[0][0] == doctest::Approx(0.5));
    CHECK(fit.posterior[0][1] == doctest::Approx(0.5));
  }
  SUBCASE("posterior follows the half-normal product at the fitted parameters") {
    // three identical labels and one outlier at distance 1
    auto d = one_item({"a", "b", "c", "d"}, {0, 0, 1, 0, 1, 1});
    auto fit = fit_madd(d);
    std::vector<double> logp(4, 0.0);
    for (std::size_t h = 0; h < 4; ++h) {
      for (std::size_t u = 0; u < 4; ++u) {
        const double s = fit.alpha[u] * fit.beta[0];
        const double x = d.items()[0](u, h);
        logp[h] += 0.5 * std::log(2.0 / std::numbers::pi) - std::log(s) - x * x / (2 * s * s);
      }
    }
    const double mx = *std::max_element(logp.begin(), logp.end());
    double z = 0;
    for (double v : logp) z += std::exp(v - mx);
    for (std::size_t h = 0; h < 4; ++h) {
      CHECK(fit.posterior[0][h] == doctest::Approx(std::exp(logp[h] - mx) / z).epsilon(1e-9));
    }
    CHECK(fit.selection(d).chosen[0] == 0);
  }
  SUBCASE("log posterior never decreases; posteriors normalized") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto fit = fit_madd(random_distances(200 + seed, 20, 5));
      for (std::size_t t = 1; t < fit.trace.size(); ++t) CHECK(fit.trace[t] >= fit.trace[t - 1] - 1e-9);
      for (const auto& p : fit.posterior) {
        double sum = 0;
        for (double v : p) sum += v;
        CHECK(sum == doctest::Approx(1.0));
      }
      for (double a : fit.alpha) CHECK(a > 0);
      for (double b : fit.beta) CHECK(b > 0);
    }
  }
  SUBCASE("all-zero distances give uniform posteriors") {
    auto fit = fit_madd(one_item({"a", "b", "c"}, {0, 0, 0}));
    for (double p : fit.posterior[0]) CHECK(p == doctest::Approx(1.0 / 3));
  }
  CHECK(madd_weight(std::exp(-2.0)) == doctest::Approx(0.5));
  CHECK(std::isfinite(madd_weight(1.0)));
  CHECK(std::isfinite(madd_weight(0.0)));
}

TEST_CASE("honeypot worker error") {
  AnnotationDataset::Builder b(TaskKind::number);
  b.add("h1", "u", Number{0.2}).add("h2", "u", Number{0.4}).add("h1", "v", Number{0.0}).add("h2", "v", Number{0.0});
  b.add("x", "w", Number{1.0}).add("x", "u", Number{1.0});
  b.add_gold("h1", Number{0.0}).add_gold("h2", Number{0.0});
  auto ds = std::move(b).build();
  auto g = honeypot_worker_error(ds, make_metric("abs"), {*ds.find_item("h1"), *ds.find_item("h2")});
  CHECK(*g[*ds.find_worker("u")] == doctest::Approx(0.3));
  CHECK(*g[*ds.find_worker("v")] == doctest::Approx(1e-4));
  CHECK_FALSE(g[*ds.find_worker("w")].has_value());
}

TEST_CASE("baselines") {
  auto ds = categories({{"1", "1", "1"}, {"0", "1", "0"}, {"1", "0", ""}});
  auto mv = majority_vote(ds);
  CHECK(mv[0] == "1");
  CHECK(mv[1] == "0");
  CHECK(mv[2] == "0");  // tie, smallest symbol
  auto em = dawid_skene_binary(ds);
  CHECK(em.labels[0] == "1");

  auto single = categories({{"1", "", ""}, {"", "0", ""}});
  for (const auto& trial : random_user(single, 4)) {
    CHECK(trial == std::vector<std::size_t>{0, 0});
  }
  CHECK(random_user(ds, 4).size() == 5);
  CHECK(random_user(ds, 4) == random_user(ds, 4));

  auto three = categories({{"a", "b", "c"}});
  CHECK_THROWS_AS(dawid_skene_binary(three), DataError);
}
