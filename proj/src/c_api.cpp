#include "distagg/c_api.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "distagg/dataset.hpp"
#include "distagg/diagnostics.hpp"
#include "distagg/error.hpp"
#include "distagg/metrics.hpp"
#include "distagg/pipeline.hpp"
#include "distagg/simulate.hpp"
#include "distagg/sweep.hpp"

using namespace distagg;

struct distagg_dataset {
  AnnotationDataset ds;
};
struct distagg_config {
  RunConfig cfg;
};
struct distagg_result {
  AggregationResult res;
  json config = json::object();
  std::uint64_t seed = 0;
};

namespace {

thread_local std::string last_error;

template <typename Fn>
distagg_status guard(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return DISTAGG_OK;
  } catch (const MetricError& e) {
    last_error = e.what();
    return DISTAGG_E_METRIC;
  } catch (const DataError& e) {
    last_error = e.what();
    return DISTAGG_E_DATA;
  } catch (const ConfigError& e) {
    last_error = e.what();
    return DISTAGG_E_CONFIG;
  } catch (const NumericError& e) {
    last_error = e.what();
    return DISTAGG_E_NUMERIC;
  } catch (const json::exception& e) {
    last_error = std::string("json: ") + e.what();
    return DISTAGG_E_DATA;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DISTAGG_E_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return DISTAGG_E_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

distagg_status checked(std::initializer_list<std::pair<const void*, const char*>> args) {
  for (const auto& [p, what] : args) {
    if (!p) {
      last_error = std::string("null argument: ") + what;
      return DISTAGG_E_ARGUMENT;
    }
  }
  return DISTAGG_OK;
}

json parse_json_text(const char* text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

extern "C" {

const char* distagg_version(void) { return DISTAGG_VERSION; }

const char* distagg_last_error(void) { return last_error.c_str(); }

const char* distagg_status_name(distagg_status s) {
  switch (s) {
    case DISTAGG_OK: return "ok";
    case DISTAGG_E_DATA: return "data error";
    case DISTAGG_E_METRIC: return "metric error";
    case DISTAGG_E_CONFIG: return "config error";
    case DISTAGG_E_NUMERIC: return "numeric error";
    case DISTAGG_E_ARGUMENT: return "argument error";
    case DISTAGG_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void distagg_string_free(char* s) { std::free(s); }

distagg_status distagg_dataset_load(const char* data_path, const char* task, const char* gold_path,
                                    distagg_dataset** out) {
  if (auto st = checked({{data_path, "data_path"}, {task, "task"}, {out, "out"}})) return st;
  return guard([&] {
    std::optional<std::filesystem::path> gold;
    if (gold_path) gold = gold_path;
    auto ds = load_dataset(data_path, parse_task_kind(task), gold);
    *out = new distagg_dataset{std::move(ds)};
  });
}

distagg_status distagg_dataset_parse(const char* data_jsonl, const char* task, const char* gold_jsonl,
                                     distagg_dataset** out) {
  if (auto st = checked({{data_jsonl, "data_jsonl"}, {task, "task"}, {out, "out"}})) return st;
  return guard([&] {
    auto ds = parse_dataset(data_jsonl, parse_task_kind(task), gold_jsonl ? gold_jsonl : "");
    *out = new distagg_dataset{std::move(ds)};
  });
}

void distagg_dataset_free(distagg_dataset* d) { delete d; }

distagg_status distagg_dataset_info(const distagg_dataset* d, size_t* items, size_t* workers, size_t* annotations,
                                    size_t* gold_items) {
  if (auto st = checked({{d, "dataset"}})) return st;
  if (items) *items = d->ds.item_count();
  if (workers) *workers = d->ds.worker_count();
  if (annotations) *annotations = d->ds.annotation_count();
  if (gold_items) *gold_items = d->ds.gold_count();
  return DISTAGG_OK;
}

distagg_status distagg_dataset_write(const distagg_dataset* d, const char* data_path, const char* gold_path) {
  if (auto st = checked({{d, "dataset"}, {data_path, "data_path"}})) return st;
  return guard([&] {
    std::optional<std::filesystem::path> gold;
    if (gold_path) gold = gold_path;
    write_dataset(d->ds, data_path, gold);
  });
}

distagg_status distagg_config_new(distagg_config** out) {
  if (auto st = checked({{out, "out"}})) return st;
  return guard([&] { *out = new distagg_config{}; });
}

void distagg_config_free(distagg_config* c) { delete c; }

distagg_status distagg_config_set(distagg_config* c, const char* key, const char* value) {
  if (auto st = checked({{c, "config"}, {key, "key"}, {value, "value"}})) return st;
  return guard([&] {
    const std::string k = key;
    const auto dot = k.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == k.size()) {
      throw ConfigError("config key '" + k + "' must look like section.name");
    }
    const std::string v = value;
    if (v.find_first_of("\n\r") != std::string::npos) throw ConfigError("config value must be a single line");
    RunConfig copy = c->cfg;
    parse_run_config("[" + k.substr(0, dot) + "]\n" + k.substr(dot + 1) + "=" + v + "\n", copy);
    c->cfg = copy;
  });
}

distagg_status distagg_config_load(distagg_config* c, const char* ini_path) {
  if (auto st = checked({{c, "config"}, {ini_path, "ini_path"}})) return st;
  return guard([&] {
    RunConfig copy = c->cfg;
    load_run_config(ini_path, copy);
    c->cfg = copy;
  });
}

distagg_status distagg_config_to_json(const distagg_config* c, char** out) {
  if (auto st = checked({{c, "config"}, {out, "out"}})) return st;
  return guard([&] { *out = dup(run_config_to_json(c->cfg).dump(2)); });
}

distagg_status distagg_method_names(char** out) {
  if (auto st = checked({{out, "out"}})) return st;
  return guard([&] { *out = dup(json(method_names()).dump()); });
}

distagg_status distagg_aggregate(const distagg_dataset* d, const distagg_config* c, distagg_result** out) {
  if (auto st = checked({{d, "dataset"}, {c, "config"}, {out, "out"}})) return st;
  return guard([&] {
    auto res = aggregate(d->ds, c->cfg);
    *out = new distagg_result{std::move(res), run_config_to_json(c->cfg), c->cfg.seed};
  });
}

void distagg_result_free(distagg_result* r) { delete r; }

distagg_status distagg_result_to_json(const distagg_result* r, char** out) {
  if (auto st = checked({{r, "result"}, {out, "out"}})) return st;
  return guard([&] {
    json j = result_to_json(r->res);
    j["header"] = report_header(r->config, r->seed);
    *out = dup(j.dump(2));
  });
}

distagg_status distagg_result_from_json(const char* text, distagg_result** out) {
  if (auto st = checked({{text, "json_text"}, {out, "out"}})) return st;
  return guard([&] {
    json j = parse_json_text(text, "result");
    json header = j.value("header", json::object());
    if (j.contains("result")) {  // full report
      j = j.at("result");
      if (j.contains("header")) header = j.at("header");
    }
    auto res = result_from_json(j);
    const json config = header.value("config", json::object());
    const std::uint64_t seed = header.value("seed", std::uint64_t{0});
    *out = new distagg_result{std::move(res), std::move(config), seed};
  });
}

distagg_status distagg_result_to_csv(const distagg_result* r, char** out) {
  if (auto st = checked({{r, "result"}, {out, "out"}})) return st;
  return guard([&] { *out = dup(result_to_csv(r->res)); });
}

distagg_status distagg_result_failed_items(const distagg_result* r, size_t* out) {
  if (auto st = checked({{r, "result"}, {out, "out"}})) return st;
  *out = r->res.failed_items();
  return DISTAGG_OK;
}

distagg_status distagg_evaluate(const distagg_result* r, const distagg_dataset* d, const char* metric,
                                char** out_json, double* mean) {
  if (auto st = checked({{r, "result"}, {d, "dataset"}})) return st;
  return guard([&] {
    if (r->res.task != d->ds.task()) throw ConfigError("result and dataset hold different label kinds");
    const Metric m = make_metric(metric ? metric : default_metric_name(d->ds.task()));
    const Evaluation ev = evaluate_against_gold(r->res, d->ds, m);
    if (mean) *mean = ev.mean;
    if (out_json) {
      json j = evaluation_to_json(ev);
      j["metric"] = m.name();
      *out_json = dup(j.dump(2));
    }
  });
}

distagg_status distagg_distance(const char* metric, const char* a, const char* b, double* out) {
  if (auto st = checked({{metric, "metric"}, {a, "label_a_json"}, {b, "label_b_json"}, {out, "out"}})) return st;
  return guard([&] {
    const Metric m = make_metric(metric);
    const Label la = label_from_json(parse_json_text(a, "label a"), m.variant());
    const Label lb = label_from_json(parse_json_text(b, "label b"), m.variant());
    *out = m.distance(la, lb);
  });
}

distagg_status distagg_metric_task(const char* metric, const char** out_task) {
  if (auto st = checked({{metric, "metric"}, {out_task, "out_task"}})) return st;
  // to_string of a TaskKind views a literal, so the pointer stays valid
  return guard([&] { *out_task = to_string(make_metric(metric).variant()).data(); });
}

distagg_status distagg_krippendorff_alpha(const distagg_dataset* d, const char* metric, double* out) {
  if (auto st = checked({{d, "dataset"}, {out, "out"}})) return st;
  return guard([&] {
    const Metric m = make_metric(metric ? metric : default_metric_name(d->ds.task()));
    *out = krippendorff_alpha(d->ds, m);
  });
}

distagg_status distagg_simulate(const char* task, size_t n_items, size_t n_workers, double r, const char* preset,
                                uint64_t seed, distagg_dataset** out, char** truth_json) {
  if (auto st = checked({{task, "task"}, {preset, "preset"}, {out, "out"}})) return st;
  return guard([&] {
    SimConfig c;
    c.task = parse_sim_task(task);
    c.n_items = n_items;
    c.n_workers = n_workers;
    c.r = r;
    c.preset = parse_error_preset(preset);
    c.seed = seed;
    SimData sim = simulate(c);
    if (truth_json) *truth_json = dup(truth_to_json(sim.truth).dump(2));
    *out = new distagg_dataset{std::move(sim.dataset)};
  });
}

distagg_status distagg_sweep(const char* grid_ini_path, unsigned threads, distagg_progress_fn progress, void* user,
                             char** out_csv, size_t* failed_cells) {
  if (auto st = checked({{out_csv, "out_csv"}})) return st;
  return guard([&] {
    const SweepGrid grid = grid_ini_path ? load_sweep_grid(grid_ini_path) : SweepGrid{};
    SweepOptions opt;
    opt.threads = threads;
    if (progress) opt.progress = [&](std::size_t done, std::size_t total) { progress(done, total, user); };
    const auto rows = run_sweep(grid, opt);
    if (failed_cells) {
      *failed_cells = 0;
      for (const auto& row : rows) *failed_cells += row.seeds_failed > 0 ? 1 : 0;
    }
    *out_csv = dup(sweep_to_csv(rows));
  });
}

distagg_status distagg_diagnose(const distagg_dataset* d, const char* metric, const char* fit_json,
                                const char* sim_truth_json, unsigned flags, char** out_report, int* any_failed) {
  if (auto st = checked({{d, "dataset"}, {fit_json, "fit_json"}, {out_report, "out_report_json"}})) return st;
  return guard([&] {
    json j = parse_json_text(fit_json, "fit");
    if (j.contains("result")) j = j.at("result");
    if (j.contains("fit")) j = j.at("fit");
    if (j.contains("mas")) j = j.at("mas");
    if (!j.contains("x")) throw DataError("fit file holds no MAS embedding (run aggregate with method mas or smas)");
    const Metric m = make_metric(metric ? metric : default_metric_name(d->ds.task()));
    const DistanceDataset dd = build_distance_dataset(d->ds, m);
    const MasFit fit = mas_fit_from_json(j, dd);
    DiagnoseOptions opt;
    if (sim_truth_json) opt.sim_sigma = truth_from_json(parse_json_text(sim_truth_json, "simulation truth")).worker_sigma;
    opt.run_scarcity = (flags & 1u) == 0;
    opt.run_weight_confidence = (flags & 2u) == 0;
    const DiagnosticReport report = diagnose(dd, fit, opt);
    if (any_failed) *any_failed = report.any_failed() ? 1 : 0;
    *out_report = dup(report.to_json().dump(2));
  });
}

}  // extern "C"
