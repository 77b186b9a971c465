#include "distagg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "distagg/diagnostics.hpp"
#include "distagg/error.hpp"
#include "distagg/metrics.hpp"
#include "distagg/partition.hpp"
#include "distagg/rng.hpp"

namespace distagg {

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"sad", "bau",  "mas",  "madd", "smas",  "mv",    "ds",
                                                 "ru",  "dmr",  "mean", "median", "psr", "pdmrr"};
  return names;
}

std::vector<std::size_t> choose_honeypots(const AnnotationDataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("honeypot fraction must be in (0, 1]");
  std::vector<std::size_t> golden;
  for (std::size_t i = 0; i < ds.item_count(); ++i) {
    if (ds.gold(i)) golden.push_back(i);
  }
  if (golden.empty()) throw DataError("smas needs gold for at least one item");
  auto n = static_cast<std::size_t>(std::llround(fraction * double(golden.size())));
  n = std::clamp<std::size_t>(n, 1, golden.size());
  Rng rng = make_rng(seed, "honeypots");
  // partial Fisher-Yates
  for (std::size_t k = 0; k < n; ++k) {
    std::swap(golden[k], golden[k + uniform_index(rng, golden.size() - k)]);
  }
  golden.resize(n);
  std::sort(golden.begin(), golden.end());
  return golden;
}

namespace {

bool is_selection(const std::string& m) {
  return m == "sad" || m == "bau" || m == "mas" || m == "madd" || m == "smas";
}

json mas_summary(const MasFit& fit, const DistanceDataset& d) {
  json gamma = json::object();
  for (std::size_t u = 0; u < d.worker_count(); ++u) {
    if (fit.worker_active[u]) gamma[d.worker_ids()[u]] = fit.gamma[u];
  }
  json j = {{"gamma", std::move(gamma)},
            {"sigma", fit.sigma},
            {"iterations", fit.iterations},
            {"hit_max_iter", fit.hit_max_iter},
            {"log_posterior_initial", fit.log_posterior_initial},
            {"log_posterior", fit.log_posterior},
            {"mas", mas_fit_to_json(fit, d)}};
  std::vector<std::string> uncovered;
  for (std::size_t u = 0; u < d.worker_count(); ++u) {
    if (u < fit.gamma_uncovered.size() && fit.gamma_uncovered[u]) uncovered.push_back(d.worker_ids()[u]);
  }
  if (!uncovered.empty()) j["gamma_uncovered"] = uncovered;
  return j;
}

// MADD needs 2+ labels per item; fit on those items and give singletons a
// posterior of 1.
Selection madd_selection(const DistanceDataset& d, const MaddConfig& cfg, json& fit_out) {
  std::vector<std::size_t> keep;
  std::vector<std::string> ids;
  std::vector<ItemDistances> items;
  for (std::size_t i = 0; i < d.items().size(); ++i) {
    if (d.items()[i].size() >= 2) {
      keep.push_back(i);
      ids.push_back(d.item_ids()[i]);
      items.push_back(d.items()[i]);
    }
  }
  Selection sel;
  sel.method = "madd";
  sel.higher_is_better = true;
  sel.scores.resize(d.items().size());
  for (std::size_t i = 0; i < d.items().size(); ++i) sel.scores[i].assign(d.items()[i].size(), 1.0);
  if (!keep.empty()) {
    const DistanceDataset sub(std::move(ids), d.worker_ids(), std::move(items));
    const MaddFit fit = fit_madd(sub, cfg);
    for (std::size_t k = 0; k < keep.size(); ++k) sel.scores[keep[k]] = fit.posterior[k];
    json alpha = json::object();
    for (std::size_t u = 0; u < d.worker_count(); ++u) alpha[d.worker_ids()[u]] = fit.alpha[u];
    fit_out = {{"alpha", std::move(alpha)}, {"iterations", fit.iterations}, {"converged", fit.converged},
               {"trace", fit.trace}};
  }
  choose_all(d, sel);
  return sel;
}

Selection run_selection(const std::string& method, const AnnotationDataset& ds, const DistanceDataset& d,
                        const Metric& metric, const RunConfig& cfg, AggregationResult& res) {
  MasConfig mc = cfg.mas;
  mc.seed = cfg.seed;
  if (method == "sad") return aggregate_sad(d);
  if (method == "bau") {
    auto scores = bau_worker_scores(d);
    json bau = json::object();
    for (std::size_t u = 0; u < d.worker_count(); ++u) {
      if (std::isfinite(scores[u])) bau[d.worker_ids()[u]] = scores[u];
    }
    res.fit = {{"bau", std::move(bau)}};
    return aggregate_bau(d);
  }
  if (method == "mas") {
    const MasFit fit = fit_mas(d, mc);
    res.fit = mas_summary(fit, d);
    return fit.selection(d, "mas");
  }
  if (method == "smas") {
    const auto honeypots = choose_honeypots(ds, cfg.honeypot_fraction, cfg.seed);
    for (auto i : honeypots) res.honeypots.push_back(ds.item_id(i));
    const MasFit fit = fit_smas(d, ds, metric, honeypots, mc);
    res.fit = mas_summary(fit, d);
    return fit.selection(d, "smas");
  }
  if (method == "madd") return madd_selection(d, cfg.madd, res.fit);
  throw ConfigError("unknown selection method '" + method + "'");
}

void fill_selection(AggregationResult& res, const AnnotationDataset& ds, const DistanceDataset& d,
                    const Selection& sel) {
  json table = json::array();
  for (std::size_t i = 0; i < ds.item_count(); ++i) {
    const auto anns = ds.annotations_of(i);
    const auto& it = d.items()[i];
    ItemResult r;
    r.item = ds.item_id(i);
    r.recipe = "select:" + sel.method;
    const std::size_t slot = sel.chosen[i];
    r.label = anns[slot].label;
    r.worker = ds.worker_id(it.workers[slot]);
    r.score = sel.scores[i][slot];
    if (it.size() < 2) {
      r.recipe = "degraded";
      r.flags.push_back("degraded");
    }
    for (std::size_t s = 0; s < it.size(); ++s) {
      table.push_back({{"item", r.item}, {"worker", ds.worker_id(it.workers[s])}, {"score", sel.scores[i][s]}});
    }
    res.items.push_back(std::move(r));
  }
  res.scores = std::move(table);
}

AggregationResult run_dmr(const AnnotationDataset& ds, const DistanceDataset& d, const Metric& metric,
                          const RunConfig& cfg, const std::string& method) {
  AggregationResult res;
  res.method = method;
  res.task = ds.task();
  const Statistic stat = method == "mean" ? Statistic::mean : method == "median" ? Statistic::median : cfg.statistic;
  const bool weighted = method == "dmr" && !cfg.weights_from.empty() && cfg.weights_from != "none";
  Selection sel;
  if (weighted) {
    if (!is_selection(cfg.weights_from)) {
      throw ConfigError("unknown weight source '" + cfg.weights_from + "' (expected sad, bau, mas, madd or smas)");
    }
    sel = run_selection(cfg.weights_from, ds, d, metric, cfg, res);
    res.method = "dmr-" + cfg.weights_from;
  }
  for (std::size_t i = 0; i < ds.item_count(); ++i) {
    ItemResult r;
    r.item = ds.item_id(i);
    r.recipe = "merge:" + std::string(to_string(stat));
    std::vector<Label> labels;
    for (const auto& a : ds.annotations_of(i)) labels.push_back(a.label);
    std::vector<double> w;
    if (weighted) {
      for (double s : sel.scores[i]) w.push_back(sel.higher_is_better ? madd_weight(s) : 1.0 / std::max(s, 1e-9));
    }
    if (labels.size() < 2) {
      r.recipe = "degraded";
      r.flags.push_back("degraded");
    }
    try {
      r.label = dmr(labels, w, stat);
    } catch (const NumericError& e) {
      r.error = e.what();
    } catch (const DataError& e) {
      if (i == 0) throw;  // the variant itself cannot be merged
      r.error = e.what();
    }
    res.items.push_back(std::move(r));
  }
  return res;
}

AggregationResult run_categorical(const AnnotationDataset& ds, const std::string& method) {
  if (ds.task() != TaskKind::category) throw ConfigError(method + " needs categorical labels");
  AggregationResult res;
  res.method = method;
  res.task = ds.task();
  std::vector<std::string> labels;
  if (method == "mv") {
    labels = majority_vote(ds);
  } else {
    auto r = dawid_skene_binary(ds);
    labels = r.labels;
    res.fit = {{"classes", r.classes}, {"iterations", r.iterations}};
  }
  for (std::size_t i = 0; i < ds.item_count(); ++i) {
    ItemResult r;
    r.item = ds.item_id(i);
    r.recipe = method;
    r.label = Category{labels[i]};
    if (ds.annotations_of(i).size() < 2) r.flags.push_back("degraded");
    res.items.push_back(std::move(r));
  }
  return res;
}

AggregationResult run_random_user(const AnnotationDataset& ds, const RunConfig& cfg) {
  if (cfg.ru_trials < 1) throw ConfigError("ru: trials must be at least 1");
  AggregationResult res;
  res.method = "ru";
  res.task = ds.task();
  const auto trials = random_user(ds, cfg.seed, cfg.ru_trials);
  json picks = json::array();
  for (const auto& t : trials) {
    json row = json::object();
    for (std::size_t i = 0; i < ds.item_count(); ++i) {
      row[ds.item_id(i)] = ds.worker_id(ds.annotations_of(i)[t[i]].worker);
    }
    picks.push_back(std::move(row));
  }
  res.fit = {{"trials", std::move(picks)}};
  for (std::size_t i = 0; i < ds.item_count(); ++i) {
    const auto& a = ds.annotations_of(i)[trials[0][i]];
    ItemResult r;
    r.item = ds.item_id(i);
    r.recipe = "ru";
    r.label = a.label;
    r.worker = ds.worker_id(a.worker);
    if (ds.annotations_of(i).size() < 2) r.flags.push_back("degraded");
    res.items.push_back(std::move(r));
  }
  return res;
}

}  // namespace

AggregationResult aggregate(const AnnotationDataset& ds, const RunConfig& cfg) {
  const auto& names = method_names();
  if (std::find(names.begin(), names.end(), cfg.method) == names.end()) {
    throw ConfigError("unknown method '" + cfg.method + "'");
  }
  if (ds.item_count() == 0) throw DataError("dataset has no annotations");
  const Metric metric = make_metric(cfg.metric.empty() ? default_metric_name(ds.task()) : cfg.metric);
  if (metric.variant() != ds.task()) {
    throw ConfigError("metric '" + metric.name() + "' is for " + std::string(to_string(metric.variant())) +
                      " labels, data is " + std::string(to_string(ds.task())));
  }

  if (cfg.method == "mv" || cfg.method == "ds") return run_categorical(ds, cfg.method);
  if (cfg.method == "ru") return run_random_user(ds, cfg);

  if (cfg.method == "psr" || cfg.method == "pdmrr") {
    PartitionOptions opt;
    opt.inner = cfg.inner;
    opt.oracle = cfg.oracle_partition;
    opt.statistic = cfg.statistic;
    opt.weights_from = cfg.weights_from;
    opt.mas = cfg.mas;
    opt.mas.seed = cfg.seed;
    opt.madd = cfg.madd;
    if (opt.oracle && ds.gold_count() == 0) throw ConfigError("oracle partition needs gold");
    return cfg.method == "psr" ? psr(ds, metric, opt) : pdmrr(ds, metric, opt);
  }

  const DistanceDataset d = build_distance_dataset(ds, metric);
  if (cfg.method == "dmr" || cfg.method == "mean" || cfg.method == "median") {
    return run_dmr(ds, d, metric, cfg, cfg.method);
  }

  AggregationResult res;
  res.method = cfg.method;
  res.task = ds.task();
  const Selection sel = run_selection(cfg.method, ds, d, metric, cfg, res);
  fill_selection(res, ds, d, sel);
  return res;
}

// ---------------------------------------------------------------------------
// INI config

namespace {

namespace pt = boost::property_tree;

template <typename T>
T get_value(const pt::ptree& node, const std::string& where) {
  auto v = node.get_value_optional<T>();
  if (!v) throw ConfigError("bad value '" + node.data() + "' for " + where);
  return *v;
}

bool get_bool(const pt::ptree& node, const std::string& where) {
  const std::string s = node.data();
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("bad boolean '" + s + "' for " + where);
}

void apply_tree(const pt::ptree& tree, RunConfig& cfg) {
  for (const auto& [section, body] : tree) {
    if (!body.data().empty() && body.empty()) {
      throw ConfigError("key '" + section + "' outside of a section");
    }
    for (const auto& [key, node] : body) {
      const std::string where = section + "." + key;
      if (section == "run") {
        if (key == "method") cfg.method = node.data();
        else if (key == "metric") cfg.metric = node.data();
        else if (key == "seed") cfg.seed = get_value<std::uint64_t>(node, where);
        else if (key == "inner") cfg.inner = node.data();
        else if (key == "oracle_partition") cfg.oracle_partition = get_bool(node, where);
        else if (key == "honeypot_fraction") cfg.honeypot_fraction = get_value<double>(node, where);
        else if (key == "ru_trials") cfg.ru_trials = get_value<int>(node, where);
        else throw ConfigError("unknown config key '" + where + "'");
      } else if (section == "mas") {
        if (key == "K") cfg.mas.K = get_value<int>(node, where);
        else if (key == "phi") cfg.mas.phi = get_value<double>(node, where);
        else if (key == "psi") cfg.mas.psi = get_value<double>(node, where);
        else if (key == "max_iter") cfg.mas.max_iter = get_value<int>(node, where);
        else if (key == "sigma_floor") cfg.mas.sigma_floor = get_value<double>(node, where);
        else if (key == "init") cfg.mas.init = parse_mas_init(node.data());
        else throw ConfigError("unknown config key '" + where + "'");
      } else if (section == "madd") {
        if (key == "max_em_iter") cfg.madd.max_em_iter = get_value<int>(node, where);
        else if (key == "max_mstep_iter") cfg.madd.max_mstep_iter = get_value<int>(node, where);
        else if (key == "tol") cfg.madd.tol = get_value<double>(node, where);
        else throw ConfigError("unknown config key '" + where + "'");
      } else if (section == "merge") {
        if (key == "statistic") cfg.statistic = parse_statistic(node.data());
        else if (key == "weights_from") cfg.weights_from = node.data();
        else throw ConfigError("unknown config key '" + where + "'");
      } else if (section == "sweep") {
        // read by the sweep loader
      } else {
        throw ConfigError("unknown config section '" + section + "'");
      }
    }
  }
}

}  // namespace

void parse_run_config(const std::string& text, RunConfig& cfg) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  apply_tree(tree, cfg);
}

void load_run_config(const std::filesystem::path& path, RunConfig& cfg) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  apply_tree(tree, cfg);
}

json run_config_to_json(const RunConfig& c) {
  return {{"method", c.method},
          {"metric", c.metric},
          {"seed", c.seed},
          {"inner", c.inner},
          {"oracle_partition", c.oracle_partition},
          {"honeypot_fraction", c.honeypot_fraction},
          {"ru_trials", c.ru_trials},
          {"mas",
           {{"K", c.mas.K},
            {"phi", c.mas.phi},
            {"psi", c.mas.psi},
            {"max_iter", c.mas.max_iter},
            {"sigma_floor", c.mas.sigma_floor},
            {"init", to_string(c.mas.init)}}},
          {"madd", {{"max_em_iter", c.madd.max_em_iter}, {"max_mstep_iter", c.madd.max_mstep_iter}, {"tol", c.madd.tol}}},
          {"merge", {{"statistic", to_string(c.statistic)}, {"weights_from", c.weights_from}}}};
}

json report_header(const json& config, std::uint64_t seed) {
  return {{"config", config}, {"seed", seed}, {"version", DISTAGG_VERSION}};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string result_to_csv(const AggregationResult& res) {
  std::ostringstream out;
  out << "item,label,worker,score,recipe,flags,error\n";
  out.precision(17);
  for (const auto& r : res.items) {
    std::string flags;
    for (const auto& f : r.flags) flags += (flags.empty() ? "" : ";") + f;
    out << csv_field(r.item) << ',' << csv_field(r.label ? label_to_json(*r.label).dump() : "") << ','
        << csv_field(r.worker.value_or("")) << ',';
    if (std::isfinite(r.score)) out << r.score;
    out << ',' << csv_field(r.recipe) << ',' << csv_field(flags) << ',' << csv_field(r.error) << '\n';
  }
  return out.str();
}

}  // namespace distagg
