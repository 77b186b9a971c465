#include "distagg/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "distagg/error.hpp"
#include "distagg/metrics.hpp"
#include "distagg/simulate.hpp"

namespace distagg {

std::optional<double> pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw DataError("pearson: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double stddev(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double m = 0.0;
  for (double x : xs) m += x;
  m /= double(xs.size());
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / double(xs.size()));
}

std::string_view to_string(DiagStatus s) {
  switch (s) {
    case DiagStatus::pass: return "pass";
    case DiagStatus::fail: return "fail";
    case DiagStatus::not_applicable: return "not-applicable";
  }
  return "not-applicable";
}

DiagStatus parse_diag_status(std::string_view name) {
  if (name == "pass") return DiagStatus::pass;
  if (name == "fail") return DiagStatus::fail;
  if (name == "not-applicable") return DiagStatus::not_applicable;
  throw DataError("unknown diagnostic status '" + std::string(name) + "'");
}

bool DiagnosticReport::any_failed() const {
  return std::any_of(tests.begin(), tests.end(), [](const auto& t) { return t.status == DiagStatus::fail; });
}

json DiagnosticReport::to_json() const {
  json arr = json::array();
  for (const auto& t : tests) {
    arr.push_back({{"name", t.name},
                   {"inputs", t.inputs},
                   {"statistic_name", t.statistic_name},
                   {"statistic", std::isfinite(t.statistic) ? json(t.statistic) : json(nullptr)},
                   {"threshold", t.threshold},
                   {"status", to_string(t.status)},
                   {"note", t.note},
                   {"data", t.data}});
  }
  return {{"tests", std::move(arr)}, {"any_failed", any_failed()}};
}

DiagnosticReport DiagnosticReport::from_json(const json& j) {
  DiagnosticReport r;
  try {
    for (const auto& t : j.at("tests")) {
      DiagnosticEntry e;
      e.name = t.at("name").get<std::string>();
      e.inputs = t.at("inputs").get<std::string>();
      e.statistic_name = t.at("statistic_name").get<std::string>();
      if (!t.at("statistic").is_null()) e.statistic = t.at("statistic").get<double>();
      e.threshold = t.at("threshold").get<double>();
      e.status = parse_diag_status(t.at("status").get<std::string>());
      e.note = t.at("note").get<std::string>();
      e.data = t.at("data");
      r.tests.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed diagnostic report: ") + e.what());
  }
  return r;
}

namespace {

DiagnosticEntry correlation_entry(std::string name, std::string inputs, const std::vector<double>& xs,
                                  const std::vector<double>& ys, double threshold) {
  DiagnosticEntry e;
  e.name = std::move(name);
  e.inputs = std::move(inputs) + " (n=" + std::to_string(xs.size()) + ")";
  e.statistic_name = "rho";
  e.threshold = threshold;
  e.data = {{"x", xs}, {"y", ys}};
  auto rho = pearson(xs, ys);
  if (!rho) {
    e.note = xs.size() < 2 ? "fewer than 2 points" : "constant input";
    return e;
  }
  e.statistic = *rho;
  e.status = *rho >= threshold ? DiagStatus::pass : DiagStatus::fail;
  return e;
}

std::vector<double> active_gamma(const MasFit& fit) {
  std::vector<double> g;
  for (std::size_t u = 0; u < fit.gamma.size(); ++u) {
    if (fit.worker_active[u]) g.push_back(fit.gamma[u]);
  }
  return g;
}

std::vector<double> flat(const std::vector<std::vector<double>>& v) {
  std::vector<double> out;
  for (const auto& row : v) out.insert(out.end(), row.begin(), row.end());
  return out;
}

}  // namespace

DiagnosticEntry test1_worker_error(const MasFit& fit, const std::vector<double>& reference,
                                   const std::string& reference_name) {
  std::vector<double> g, ref;
  for (std::size_t u = 0; u < fit.gamma.size() && u < reference.size(); ++u) {
    if (fit.worker_active[u] && std::isfinite(reference[u])) {
      g.push_back(fit.gamma[u]);
      ref.push_back(reference[u]);
    }
  }
  return correlation_entry("worker_error[" + reference_name + "]", "gamma vs " + reference_name + " over workers",
                           g, ref, 0.5);
}

DiagnosticEntry test2_weight_application(const MasFit& fit, const DistanceDataset& d) {
  const auto sad = aggregate_sad(d);
  std::vector<double> g, diff;
  std::vector<bool> seen(d.worker_count(), false);
  for (std::size_t i = 0; i < d.items().size(); ++i) {
    const auto& it = d.items()[i];
    if (it.size() < 2) continue;
    for (std::size_t s = 0; s < it.size(); ++s) {
      g.push_back(fit.gamma[it.workers[s]]);
      diff.push_back(fit.epsilon(i, s) - sad.scores[i][s]);
      seen[it.workers[s]] = true;
    }
  }
  auto e = correlation_entry("weight_application", "gamma_u vs eps_mas - eps_sad over labels", g, diff, 0.2);
  if (std::count(seen.begin(), seen.end(), true) < 2) {
    e.status = DiagStatus::not_applicable;
    e.statistic = std::numeric_limits<double>::quiet_NaN();
    e.note = "fewer than 2 workers";
  }
  return e;
}

DiagnosticEntry test3_distance_fit(const MasFit& fit, const DistanceDataset& d) {
  std::vector<double> emb, obs;
  for (std::size_t i = 0; i < d.items().size(); ++i) {
    const auto& it = d.items()[i];
    for (std::size_t a = 0; a < it.size(); ++a) {
      for (std::size_t b = a + 1; b < it.size(); ++b) {
        emb.push_back(fit.embedded_distance(i, a, b));
        obs.push_back(it(a, b));
      }
    }
  }
  return correlation_entry("distance_fit", "embedded vs observed distance over pairs", emb, obs, 0.8);
}

DiagnosticEntry test4_prediction_health(const MasFit& fit) {
  const auto eps = flat(fit.epsilons());
  DiagnosticEntry e;
  e.name = "prediction_health";
  e.inputs = "eps_mas over labels (n=" + std::to_string(eps.size()) + ")";
  e.statistic_name = "sd";
  e.threshold = 0.05;
  if (eps.empty()) {
    e.note = "no labels";
    return e;
  }
  e.statistic = stddev(eps);
  e.status = e.statistic > e.threshold ? DiagStatus::pass : DiagStatus::fail;
  // 20-bin histogram
  const double lo = *std::min_element(eps.begin(), eps.end());
  const double hi = *std::max_element(eps.begin(), eps.end());
  const int bins = 20;
  std::vector<int> counts(bins, 0);
  for (double v : eps) {
    int b = hi > lo ? static_cast<int>((v - lo) / (hi - lo) * bins) : 0;
    counts[std::min(b, bins - 1)]++;
  }
  e.data = {{"histogram", {{"min", lo}, {"max", hi}, {"counts", counts}}}};
  return e;
}

DiagnosticEntry test5_scarcity_shrinkage(const MasFit& scarce, const MasFit& abundant) {
  const auto gs = active_gamma(scarce), ga = active_gamma(abundant);
  DiagnosticEntry e;
  e.name = "scarcity_shrinkage";
  e.inputs = "sd(gamma) scarce (n=" + std::to_string(gs.size()) + ") vs abundant (n=" + std::to_string(ga.size()) + ")";
  e.statistic_name = "sd";
  e.data = {{"gamma_scarce", gs}, {"gamma_abundant", ga}};
  if (gs.size() < 2 || ga.size() < 2) {
    e.note = "fewer than 2 workers";
    return e;
  }
  e.statistic = stddev(gs);
  e.threshold = stddev(ga);
  e.status = e.statistic < e.threshold ? DiagStatus::pass : DiagStatus::fail;
  return e;
}

DiagnosticEntry test6_weight_confidence(const std::vector<double>& eps_sad, const std::vector<double>& eps_mas_default,
                                        const std::vector<double>& eps_mas_small_phi) {
  DiagnosticEntry e;
  e.name = "weight_confidence";
  e.inputs = "rho(eps_sad, eps_mas) at default phi vs small phi (n=" + std::to_string(eps_sad.size()) + ")";
  e.statistic_name = "rho";
  e.data = {{"eps_sad", eps_sad}, {"eps_mas_default", eps_mas_default}, {"eps_mas_small_phi", eps_mas_small_phi}};
  auto a = pearson(eps_sad, eps_mas_default);
  auto b = pearson(eps_sad, eps_mas_small_phi);
  if (!a || !b) {
    e.note = "constant input or fewer than 2 labels";
    return e;
  }
  e.statistic = *a;
  e.threshold = *b;
  e.status = *a < *b - 1e-6 ? DiagStatus::pass : DiagStatus::fail;
  return e;
}

namespace {

std::vector<double> labelled_eps(const std::vector<std::vector<double>>& eps, const DistanceDataset& d) {
  std::vector<double> out;
  for (std::size_t i = 0; i < d.items().size(); ++i) {
    if (d.items()[i].size() < 2) continue;
    out.insert(out.end(), eps[i].begin(), eps[i].end());
  }
  return out;
}

MasFit scarcity_fit(double r, const MasConfig& cfg) {
  SimConfig sc;
  sc.task = SimTask::binary;
  sc.n_items = 300;
  sc.n_workers = 10;
  sc.r = r;
  sc.preset = ErrorPreset::uniform;
  sc.seed = cfg.seed;
  auto sim = simulate(sc);
  const auto d = build_distance_dataset(sim.dataset, make_metric(sim_metric(SimTask::binary)));
  return fit_mas(d, cfg);
}

}  // namespace

DiagnosticReport diagnose(const DistanceDataset& d, const MasFit& fit, const DiagnoseOptions& opt) {
  DiagnosticReport r;
  r.tests.push_back(test1_worker_error(fit, bau_worker_scores(d), "bau"));
  if (!opt.sim_sigma.empty()) {
    std::vector<double> ref(d.worker_count(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t u = 0; u < d.worker_count(); ++u) {
      auto it = opt.sim_sigma.find(d.worker_ids()[u]);
      if (it != opt.sim_sigma.end()) ref[u] = it->second;
    }
    r.tests.push_back(test1_worker_error(fit, ref, "sim_sigma"));
  }
  r.tests.push_back(test2_weight_application(fit, d));
  r.tests.push_back(test3_distance_fit(fit, d));
  r.tests.push_back(test4_prediction_health(fit));

  if (opt.run_scarcity) {
    // 2 and 6 annotators per item out of 10
    r.tests.push_back(test5_scarcity_shrinkage(scarcity_fit(0.2, fit.config), scarcity_fit(0.6, fit.config)));
  } else {
    DiagnosticEntry e;
    e.name = "scarcity_shrinkage";
    e.statistic_name = "sd";
    e.note = "skipped";
    r.tests.push_back(e);
  }

  if (opt.run_weight_confidence) {
    MasConfig low = fit.config;
    low.phi = opt.small_phi;
    const auto low_fit = fit_mas(d, low);
    r.tests.push_back(test6_weight_confidence(labelled_eps(aggregate_sad(d).scores, d),
                                              labelled_eps(fit.epsilons(), d), labelled_eps(low_fit.epsilons(), d)));
  } else {
    DiagnosticEntry e;
    e.name = "weight_confidence";
    e.statistic_name = "rho";
    e.note = "skipped";
    r.tests.push_back(e);
  }
  return r;
}

json mas_fit_to_json(const MasFit& fit, const DistanceDataset& d) {
  json slots = json::array();
  for (const auto& it : d.items()) {
    json ws = json::array();
    for (auto w : it.workers) ws.push_back(d.worker_ids()[w]);
    slots.push_back(std::move(ws));
  }
  const auto& c = fit.config;
  return {{"config",
           {{"K", c.K}, {"phi", c.phi}, {"psi", c.psi}, {"max_iter", c.max_iter}, {"seed", c.seed},
            {"sigma_floor", c.sigma_floor}, {"init", to_string(c.init)}}},
          {"items", d.item_ids()},
          {"workers", d.worker_ids()},
          {"slots", std::move(slots)},
          {"x", fit.x},
          {"gamma", fit.gamma},
          {"delta", fit.delta},
          {"sigma", fit.sigma},
          {"worker_active", fit.worker_active},
          {"gamma_fixed", fit.gamma_fixed},
          {"gamma_uncovered", fit.gamma_uncovered},
          {"log_posterior_initial", fit.log_posterior_initial},
          {"log_posterior", fit.log_posterior},
          {"iterations", fit.iterations},
          {"hit_max_iter", fit.hit_max_iter}};
}

MasFit mas_fit_from_json(const json& j, const DistanceDataset& d) {
  MasFit f;
  try {
    const auto& c = j.at("config");
    f.config.K = c.at("K").get<int>();
    f.config.phi = c.at("phi").get<double>();
    f.config.psi = c.at("psi").get<double>();
    f.config.max_iter = c.at("max_iter").get<int>();
    f.config.seed = c.at("seed").get<std::uint64_t>();
    f.config.sigma_floor = c.at("sigma_floor").get<double>();
    f.config.init = parse_mas_init(c.at("init").get<std::string>());
    if (j.at("items").get<std::vector<std::string>>() != d.item_ids() ||
        j.at("workers").get<std::vector<std::string>>() != d.worker_ids()) {
      throw DataError("fit was made on different items or workers than the data");
    }
    const auto& slots = j.at("slots");
    for (std::size_t i = 0; i < d.items().size(); ++i) {
      if (slots.at(i).size() != d.items()[i].size()) {
        throw DataError("fit slot layout differs from the data at item '" + d.item_ids()[i] + "'");
      }
    }
    f.x = j.at("x").get<std::vector<std::vector<double>>>();
    f.gamma = j.at("gamma").get<std::vector<double>>();
    f.delta = j.at("delta").get<std::vector<double>>();
    f.sigma = j.at("sigma").get<double>();
    f.worker_active = j.at("worker_active").get<std::vector<bool>>();
    f.gamma_fixed = j.at("gamma_fixed").get<std::vector<bool>>();
    f.gamma_uncovered = j.at("gamma_uncovered").get<std::vector<bool>>();
    f.log_posterior_initial = j.at("log_posterior_initial").get<double>();
    f.log_posterior = j.at("log_posterior").get<double>();
    f.iterations = j.at("iterations").get<int>();
    f.hit_max_iter = j.at("hit_max_iter").get<bool>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed fit file: ") + e.what());
  }
  for (std::size_t i = 0; i < d.items().size(); ++i) {
    if (f.x.size() != d.items().size() ||
        f.x[i].size() != d.items()[i].size() * static_cast<std::size_t>(f.config.K)) {
      throw DataError("fit embedding shape differs from the data");
    }
  }
  return f;
}

}  // namespace distagg
