// Command-line front end. Talks to the library only through the C interface.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "distagg/c_api.h"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Failure {
  int code;
  std::string kind;
  std::string message;
};

int exit_code_for(distagg_status st) {
  switch (st) {
    case DISTAGG_E_CONFIG:
    case DISTAGG_E_DATA:
    case DISTAGG_E_ARGUMENT:
      return 2;
    default:
      return 1;
  }
}

void check(distagg_status st, const std::string& what) {
  if (st != DISTAGG_OK) {
    throw Failure{exit_code_for(st), distagg_status_name(st), what + ": " + distagg_last_error()};
  }
}

[[noreturn]] void usage_error(const std::string& msg) { throw Failure{2, "usage error", msg}; }

std::string take(char* s) {
  std::string out = s ? s : "";
  distagg_string_free(s);
  return out;
}

using Dataset = std::unique_ptr<distagg_dataset, decltype(&distagg_dataset_free)>;
using Config = std::unique_ptr<distagg_config, decltype(&distagg_config_free)>;
using Result = std::unique_ptr<distagg_result, decltype(&distagg_result_free)>;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{2, "data error", "cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure{2, "data error", "cannot write '" + path.string() + "'"};
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Failure{2, "data error", path + ": " + e.what()};
  }
}

// report.json -> report.csv; anything else gets ".csv" appended
fs::path sibling(const fs::path& out, const std::string& ext) {
  fs::path p = out;
  if (p.extension() == ".json" || p.extension() == ".jsonl") return p.replace_extension(ext);
  return fs::path(out.string() + ext);
}

Dataset load(const std::string& data, const std::string& task, const std::string& gold) {
  distagg_dataset* d = nullptr;
  check(distagg_dataset_load(data.c_str(), task.c_str(), gold.empty() ? nullptr : gold.c_str(), &d),
        "loading " + data);
  return Dataset(d, distagg_dataset_free);
}

std::string task_of_metric(const std::string& metric) {
  const char* task = nullptr;
  check(distagg_metric_task(metric.c_str(), &task), "metric");
  return task;
}

std::vector<std::string> method_list() {
  char* s = nullptr;
  check(distagg_method_names(&s), "methods");
  return json::parse(take(s)).get<std::vector<std::string>>();
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
  return out;
}

// ---------------------------------------------------------------------------

struct AggregateArgs {
  std::string data, gold, task, method, metric, config, out, csv;
  std::optional<std::uint64_t> seed;
  std::optional<int> K, max_iter;
  std::optional<double> phi, psi, honeypot_fraction;
  std::string statistic, weights_from, inner, mas_init;
  bool oracle = false;
};

json aggregate_config(const AggregateArgs& a, distagg_config* cfg) {
  if (!a.config.empty()) check(distagg_config_load(cfg, a.config.c_str()), "config " + a.config);
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) check(distagg_config_set(cfg, key, v.c_str()), std::string("--") + key);
  };
  set("run.method", a.method);
  set("run.metric", a.metric);
  if (a.seed) set("run.seed", std::to_string(*a.seed));
  set("run.inner", a.inner);
  if (a.oracle) set("run.oracle_partition", "true");
  if (a.honeypot_fraction) set("run.honeypot_fraction", std::to_string(*a.honeypot_fraction));
  if (a.K) set("mas.K", std::to_string(*a.K));
  if (a.phi) set("mas.phi", std::to_string(*a.phi));
  if (a.psi) set("mas.psi", std::to_string(*a.psi));
  if (a.max_iter) set("mas.max_iter", std::to_string(*a.max_iter));
  set("mas.init", a.mas_init);
  set("merge.statistic", a.statistic);
  set("merge.weights_from", a.weights_from);
  char* s = nullptr;
  check(distagg_config_to_json(cfg, &s), "config");
  return json::parse(take(s));
}

int run_aggregate(const AggregateArgs& a, json& header) {
  Config cfg(nullptr, distagg_config_free);
  {
    distagg_config* c = nullptr;
    check(distagg_config_new(&c), "config");
    cfg.reset(c);
  }
  const json resolved = aggregate_config(a, cfg.get());
  header = {{"config", resolved}, {"seed", resolved["seed"]}, {"version", distagg_version()}};

  const auto methods = method_list();
  const std::string method = resolved["method"];
  if (std::find(methods.begin(), methods.end(), method) == methods.end()) {
    usage_error("unknown method '" + method + "' (expected one of: " + join(methods, ", ") + ")");
  }
  if (resolved["oracle_partition"].get<bool>() && a.gold.empty()) {
    usage_error("--oracle-partition needs --gold");
  }

  std::string task = a.task;
  const std::string metric = resolved["metric"];
  if (task.empty() && !metric.empty()) task = task_of_metric(metric);
  if (task.empty() && (method == "mv" || method == "ds")) task = "category";
  if (task.empty()) usage_error("give --task or --metric so the labels can be read");

  Dataset ds = load(a.data, task, a.gold);
  std::size_t n_items = 0, n_gold = 0;
  check(distagg_dataset_info(ds.get(), &n_items, nullptr, nullptr, &n_gold), "dataset");

  distagg_result* r = nullptr;
  check(distagg_aggregate(ds.get(), cfg.get(), &r), "aggregate");
  Result res(r, distagg_result_free);

  std::size_t failed = 0;
  check(distagg_result_failed_items(res.get(), &failed), "result");

  char* s = nullptr;
  check(distagg_result_to_json(res.get(), &s), "result");
  json result = json::parse(take(s));
  result.erase("header");

  json report = {{"header", header}, {"result", std::move(result)}};
  std::optional<double> mean;
  if (n_gold > 0) {
    double m = 0.0;
    char* ev = nullptr;
    check(distagg_evaluate(res.get(), ds.get(), metric.empty() ? nullptr : metric.c_str(), &ev, &m), "evaluate");
    report["evaluation"] = json::parse(take(ev));
    mean = m;
  }

  if (!a.out.empty()) {
    write_text(a.out, report.dump(2) + "\n");
    check(distagg_result_to_csv(res.get(), &s), "csv");
    write_text(a.csv.empty() ? sibling(a.out, ".csv") : fs::path(a.csv), take(s));
  }

  std::cout << "method " << method << ": " << n_items << " items, " << failed << " failed";
  if (mean) std::cout << ", mean score " << *mean << " over " << n_gold << " gold items";
  std::cout << "\n";
  return failed > 0 ? 1 : 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string task = "binary", dist = "uniform", out, gold_out, truth_out;
  std::size_t n = 300, j = 10;
  double r = 0.5;
  std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& a, json& header) {
  header = {{"config", {{"task", a.task}, {"n", a.n}, {"j", a.j}, {"r", a.r}, {"dist", a.dist}}},
            {"seed", a.seed},
            {"version", distagg_version()}};
  distagg_dataset* d = nullptr;
  char* truth = nullptr;
  check(distagg_simulate(a.task.c_str(), a.n, a.j, a.r, a.dist.c_str(), a.seed, &d, &truth), "simulate");
  Dataset ds(d, distagg_dataset_free);
  json t = json::parse(take(truth));

  const fs::path out = a.out;
  const fs::path gold = a.gold_out.empty() ? sibling(out, ".gold.jsonl") : fs::path(a.gold_out);
  const fs::path truth_path = a.truth_out.empty() ? sibling(out, ".truth.json") : fs::path(a.truth_out);
  check(distagg_dataset_write(ds.get(), out.string().c_str(), gold.string().c_str()), "write");
  write_text(truth_path, json{{"header", header}, {"truth", t}}.dump(2) + "\n");

  std::size_t ann = 0;
  check(distagg_dataset_info(ds.get(), nullptr, nullptr, &ann, nullptr), "dataset");
  std::cout << "wrote " << ann << " annotations to " << out.string() << ", gold to " << gold.string()
            << ", truth to " << truth_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string grid, out;
  unsigned threads = 1;
  bool quiet = false;
};

void progress(size_t done, size_t total, void*) {
  std::fprintf(stderr, "\rsweep %zu/%zu", done, total);
  if (done == total) std::fputc('\n', stderr);
}

int run_sweep(const SweepArgs& a, json& header) {
  header = {{"config", {{"grid", a.grid.empty() ? json(nullptr) : json(a.grid)}, {"threads", a.threads}}},
            {"version", distagg_version()}};
  char* csv = nullptr;
  std::size_t failed = 0;
  check(distagg_sweep(a.grid.empty() ? nullptr : a.grid.c_str(), a.threads, a.quiet ? nullptr : progress, nullptr,
                      &csv, &failed),
        "sweep");
  const std::string text = take(csv);
  write_text(a.out, text);
  const auto rows = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) - 1;
  std::cout << "wrote " << rows << " cells to " << a.out << " (" << failed << " with failed seeds)\n";
  return failed > 0 ? 1 : 0;
}

// ---------------------------------------------------------------------------

struct DiagnoseArgs {
  std::string fit, data, gold, task, metric, sim_truth, out;
  bool skip_scarcity = false, skip_weight_confidence = false;
};

int run_diagnose(const DiagnoseArgs& a, json& header) {
  const json fit = parse_json_file(a.fit);
  const json fit_header = fit.value("header", json::object());
  const json result = fit.contains("result") ? fit.at("result") : fit;
  header = {{"config", {{"fit", a.fit}, {"data", a.data}}},
            {"seed", fit_header.value("seed", json(0))},
            {"version", distagg_version()}};

  std::string metric = a.metric;
  if (metric.empty()) metric = fit_header.value("config", json::object()).value("metric", std::string{});
  std::string task = a.task;
  if (task.empty()) task = result.value("task", std::string{});
  if (task.empty() && !metric.empty()) task = task_of_metric(metric);
  if (task.empty()) usage_error("give --task or --metric; the fit file names neither");

  Dataset ds = load(a.data, task, a.gold);
  std::string truth;
  if (!a.sim_truth.empty()) {
    json t = parse_json_file(a.sim_truth);
    truth = (t.contains("truth") ? t.at("truth") : t).dump();
  }
  const unsigned flags = (a.skip_scarcity ? 1u : 0u) | (a.skip_weight_confidence ? 2u : 0u);
  char* rep = nullptr;
  int any_failed = 0;
  check(distagg_diagnose(ds.get(), metric.empty() ? nullptr : metric.c_str(), fit.dump().c_str(),
                         truth.empty() ? nullptr : truth.c_str(), flags, &rep, &any_failed),
        "diagnose");
  json report = json::parse(take(rep));

  for (const auto& t : report.value("tests", json::array())) {
    std::cout << t.value("status", std::string{}) << "  " << t.value("name", std::string{});
    if (t.contains("statistic") && t["statistic"].is_number()) {
      std::cout << "  " << t.value("statistic_name", std::string{}) << " = " << t["statistic"].get<double>();
    }
    std::cout << "\n";
  }
  if (!a.out.empty()) write_text(a.out, json{{"header", header}, {"diagnostics", report}}.dump(2) + "\n");
  return any_failed ? 1 : 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string result, data, gold, task, metric, out;
};

int run_evaluate(const EvaluateArgs& a, json& header) {
  const std::string text = read_text(a.result);
  header = {{"config", {{"result", a.result}, {"data", a.data}, {"gold", a.gold}}}, {"version", distagg_version()}};
  distagg_result* r = nullptr;
  check(distagg_result_from_json(text.c_str(), &r), "reading " + a.result);
  Result res(r, distagg_result_free);

  std::string task = a.task;
  if (task.empty()) {
    try {
      const json j = json::parse(text);
      task = (j.contains("result") ? j.at("result") : j).value("task", std::string{});
    } catch (const json::exception&) {
    }
  }
  if (task.empty() && !a.metric.empty()) task = task_of_metric(a.metric);
  Dataset ds = load(a.data, task, a.gold);
  std::size_t n_gold = 0;
  check(distagg_dataset_info(ds.get(), nullptr, nullptr, nullptr, &n_gold), "dataset");
  if (n_gold == 0) usage_error("no gold labels; pass --gold");

  char* ev = nullptr;
  double mean = 0.0;
  check(distagg_evaluate(res.get(), ds.get(), a.metric.empty() ? nullptr : a.metric.c_str(), &ev, &mean),
        "evaluate");
  json evaluation = json::parse(take(ev));
  std::cout << "mean " << evaluation.value("metric", std::string{}) << " score " << mean << " over " << n_gold
            << " gold items\n";
  if (!a.out.empty()) write_text(a.out, json{{"header", header}, {"evaluation", evaluation}}.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggregation of complex crowd annotations by distance-based selection and merging"};
  app.set_version_flag("--version", std::string("distagg ") + distagg_version());
  app.require_subcommand(1);

  AggregateArgs ag;
  auto* agg = app.add_subcommand("aggregate", "aggregate annotations into one label per item");
  agg->add_option("--data", ag.data, "annotations, JSON Lines {item, worker, label}")->required();
  agg->add_option("--gold", ag.gold, "gold labels, JSON Lines {item, label}");
  agg->add_option("--task", ag.task, "label kind; inferred from --metric when omitted");
  agg->add_option("--method", ag.method, "sad|bau|mas|madd|smas|mv|ds|ru|dmr|mean|median|psr|pdmrr (default mas)");
  agg->add_option("--metric", ag.metric, "distance function name");
  agg->add_option("--config", ag.config, "INI file; flags take precedence");
  agg->add_option("--seed", ag.seed);
  agg->add_option("--K", ag.K, "embedding dimension");
  agg->add_option("--phi", ag.phi, "prior sd of worker scale");
  agg->add_option("--psi", ag.psi, "prior sd of item difficulty");
  agg->add_option("--max-iter", ag.max_iter);
  agg->add_option("--mas-init", ag.mas_init, "uniform|mds");
  agg->add_option("--statistic", ag.statistic, "median|mean (dmr, pdmrr)");
  agg->add_option("--weights-from", ag.weights_from, "sad|bau|mas|madd|none");
  agg->add_option("--inner", ag.inner, "selection method inside partitions (psr, pdmrr)");
  agg->add_flag("--oracle-partition", ag.oracle, "partition objects by nearest gold object");
  agg->add_option("--honeypot-fraction", ag.honeypot_fraction, "share of gold items revealed to smas");
  agg->add_option("--out", ag.out, "JSON report; a CSV summary goes next to it");
  agg->add_option("--csv", ag.csv, "CSV summary path");

  SimulateArgs sm;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic annotation set");
  sim->add_option("--task", sm.task, "binary|ranking|keypoints")->capture_default_str();
  sim->add_option("--n", sm.n, "items")->capture_default_str();
  sim->add_option("--j", sm.j, "workers")->capture_default_str();
  sim->add_option("--r", sm.r, "share of workers per item")->capture_default_str();
  sim->add_option("--dist", sm.dist, "uniform|centered|easy_skew|difficult_skew")->capture_default_str();
  sim->add_option("--seed", sm.seed)->capture_default_str();
  sim->add_option("--out", sm.out, "annotations, JSON Lines")->required();
  sim->add_option("--gold-out", sm.gold_out, "default: <out>.gold.jsonl");
  sim->add_option("--truth-out", sm.truth_out, "default: <out>.truth.json");

  SweepArgs sw;
  auto* swp = app.add_subcommand("sweep", "run the simulation grid and compare methods per cell");
  swp->add_option("--grid", sw.grid, "INI grid file; default is the full grid");
  swp->add_option("--out", sw.out, "CSV, one row per cell")->required();
  swp->add_option("--threads", sw.threads)->capture_default_str();
  swp->add_flag("--quiet", sw.quiet, "no progress on stderr");

  DiagnoseArgs dg;
  auto* dia = app.add_subcommand("diagnose", "health checks of a fitted MAS model");
  dia->add_option("--fit", dg.fit, "report of aggregate --method mas|smas")->required();
  dia->add_option("--data", dg.data, "annotations the model was fitted on")->required();
  dia->add_option("--gold", dg.gold);
  dia->add_option("--task", dg.task);
  dia->add_option("--metric", dg.metric);
  dia->add_option("--sim-truth", dg.sim_truth, "truth file from simulate");
  dia->add_option("--out", dg.out, "JSON report");
  dia->add_flag("--skip-scarcity", dg.skip_scarcity, "skip the paired scarcity simulations");
  dia->add_flag("--skip-weight-confidence", dg.skip_weight_confidence, "skip the small-phi refit");

  EvaluateArgs ev;
  auto* eva = app.add_subcommand("evaluate", "score an aggregation report against gold");
  eva->add_option("--result", ev.result, "report of aggregate")->required();
  eva->add_option("--data", ev.data)->required();
  eva->add_option("--gold", ev.gold)->required();
  eva->add_option("--task", ev.task);
  eva->add_option("--metric", ev.metric);
  eva->add_option("--out", ev.out, "JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  json header = {{"version", distagg_version()}};
  std::string out;
  CLI::App* active = nullptr;
  try {
    if (agg->parsed()) {
      active = agg, out = ag.out;
      return run_aggregate(ag, header);
    }
    if (sim->parsed()) {
      active = sim, out = sm.out;
      return run_simulate(sm, header);
    }
    if (swp->parsed()) {
      active = swp, out = sw.out;
      return run_sweep(sw, header);
    }
    if (dia->parsed()) {
      active = dia, out = dg.out;
      return run_diagnose(dg, header);
    }
    active = eva, out = ev.out;
    return run_evaluate(ev, header);
  } catch (const Failure& f) {
    std::cerr << "distagg: " << f.kind << ": " << f.message << "\n";
    if (f.kind == "usage error" && active) std::cerr << "\n" << active->help();
    if (!out.empty()) {
      // machine-readable record in place of the report; simulate and sweep
      // outputs are data files, so the record goes next to them
      const bool data_out = active == sim || active == swp;
      const fs::path p = data_out ? fs::path(out + ".error.json") : fs::path(out);
      try {
        write_text(p, json{{"header", header}, {"error", {{"kind", f.kind}, {"message", f.message}, {"exit_code", f.code}}}}
                          .dump(2) + "\n");
      } catch (const Failure&) {
      }
    }
    return f.code;
  }
}
