#include "distagg/sweep.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "distagg/diagnostics.hpp"
#include "distagg/error.hpp"
#include "distagg/metrics.hpp"
#include "distagg/pipeline.hpp"

namespace distagg {

std::vector<SimConfig> SweepGrid::cells() const {
  std::vector<SimConfig> out;
  for (auto t : tasks) {
    for (auto n : n_items) {
      for (auto j : n_workers) {
        for (auto rr : r) {
          for (auto p : presets) {
            SimConfig c;
            c.task = t;
            c.n_items = n;
            c.n_workers = j;
            c.r = rr;
            c.preset = p;
            out.push_back(c);
          }
        }
      }
    }
  }
  return out;
}

namespace {

double mean_selected(const AnnotationDataset& ds, const Metric& metric, const std::vector<std::size_t>& chosen) {
  double s = 0.0;
  for (std::size_t i = 0; i < ds.item_count(); ++i) {
    s += metric.evaluate(ds.annotations_of(i)[chosen[i]].label, *ds.gold(i));
  }
  return s / double(ds.item_count());
}

double mean_categorical(const AnnotationDataset& ds, const std::vector<std::string>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < ds.item_count(); ++i) {
    s += std::get<Category>(*ds.gold(i)).symbol == labels[i] ? 1.0 : 0.0;
  }
  return s / double(ds.item_count());
}

}  // namespace

SweepRow run_cell(const SimConfig& cfg, const MasConfig& mas) {
  SweepRow row;
  row.config = cfg;
  const SimData sim = simulate(cfg);
  const auto& ds = sim.dataset;
  const Metric metric = make_metric(sim_metric(cfg.task));
  const DistanceDataset d = build_distance_dataset(ds, metric);

  row.sad = mean_selected(ds, metric, aggregate_sad(d).chosen);
  MasConfig mc = mas;
  mc.seed = cfg.seed;
  const MasFit fit = fit_mas(d, mc);
  row.mas = mean_selected(ds, metric, fit.selection(d).chosen);
  if (cfg.task == SimTask::binary) {
    row.mv = mean_categorical(ds, majority_vote(ds));
    row.ds = mean_categorical(ds, dawid_skene_binary(ds).labels);
  }
  row.workers_per_item = double(ds.annotation_count()) / double(ds.item_count());
  const auto sigma = worker_sigma_vector(sim);
  std::vector<double> g, s;
  for (std::size_t u = 0; u < sigma.size(); ++u) {
    if (fit.worker_active[u]) {
      g.push_back(fit.gamma[u]);
      s.push_back(sigma[u]);
    }
  }
  row.rho = pearson(g, s).value_or(std::numeric_limits<double>::quiet_NaN());
  AlphaOptions ao;
  ao.seed = cfg.seed;
  row.alpha = krippendorff_alpha(ds, metric, ao);
  row.seeds_ok = 1;
  return row;
}

std::vector<SweepRow> run_sweep(const SweepGrid& grid, const SweepOptions& opt) {
  if (grid.seeds.empty()) throw ConfigError("sweep: no seeds");
  const auto cells = grid.cells();
  std::vector<SweepRow> rows(cells.size());
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex progress_mutex;

  auto work = [&] {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      SweepRow acc;
      acc.config = cells[c];
      double sad = 0, mas = 0, dsum = 0, mv = 0, wpi = 0, rho = 0, alpha = 0;
      std::size_t rho_n = 0;
      for (auto seed : grid.seeds) {
        SimConfig sc = cells[c];
        sc.seed = seed;
        try {
          const SweepRow r = run_cell(sc, grid.mas);
          sad += r.sad;
          mas += r.mas;
          dsum += r.ds;
          mv += r.mv;
          wpi += r.workers_per_item;
          if (std::isfinite(r.rho)) {
            rho += r.rho;
            ++rho_n;
          }
          alpha += r.alpha;
          ++acc.seeds_ok;
        } catch (const std::exception& e) {
          ++acc.seeds_failed;
          if (acc.error.empty()) acc.error = "seed " + std::to_string(seed) + ": " + e.what();
        }
      }
      if (acc.seeds_ok > 0) {
        const double n = double(acc.seeds_ok);
        acc.sad = sad / n;
        acc.mas = mas / n;
        acc.ds = dsum / n;
        acc.mv = mv / n;
        acc.workers_per_item = wpi / n;
        acc.rho = rho_n ? rho / double(rho_n) : std::numeric_limits<double>::quiet_NaN();
        acc.alpha = alpha / n;
      }
      acc.config.seed = grid.seeds.front();
      rows[c] = std::move(acc);
      const std::size_t k = ++done;
      if (opt.progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        opt.progress(k, cells.size());
      }
    }
  };
  const unsigned threads = std::max(1u, opt.threads);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "task,n_items,n_workers,r,preset,seeds_ok,seeds_failed,sad,mas,ds,mv,workers_per_item,rho,alpha,error\n";
  auto num = [&](double v) {
    if (std::isfinite(v)) out << v;
  };
  for (const auto& r : rows) {
    out << to_string(r.config.task) << ',' << r.config.n_items << ',' << r.config.n_workers << ',' << r.config.r << ','
        << to_string(r.config.preset) << ',' << r.seeds_ok << ',' << r.seeds_failed << ',';
    for (double v : {r.sad, r.mas, r.ds, r.mv, r.workers_per_item, r.rho, r.alpha}) {
      num(v);
      out << ',';
    }
    out << csv_field(r.error) << '\n';
  }
  return out.str();
}

namespace {

namespace pt = boost::property_tree;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  std::erase_if(parts, [](const std::string& p) { return p.empty(); });
  if (parts.empty()) throw ConfigError("empty list in sweep grid");
  return parts;
}

template <typename T>
T parse_number(const std::string& s, const std::string& key) {
  std::istringstream in(s);
  T v{};
  if (!(in >> v) || !in.eof()) throw ConfigError("bad value '" + s + "' for sweep." + key);
  return v;
}

SweepGrid grid_from_tree(const pt::ptree& tree) {
  SweepGrid g;
  RunConfig rc;
  rc.mas = g.mas;
  pt::ptree rest;
  for (const auto& [section, body] : tree) {
    if (section != "sweep") {
      rest.add_child(section, body);
      continue;
    }
    for (const auto& [key, node] : body) {
      const auto items = split_list(node.data());
      if (key == "tasks") {
        g.tasks.clear();
        for (const auto& s : items) g.tasks.push_back(parse_sim_task(s));
      } else if (key == "n") {
        g.n_items.clear();
        for (const auto& s : items) g.n_items.push_back(parse_number<std::size_t>(s, key));
      } else if (key == "j") {
        g.n_workers.clear();
        for (const auto& s : items) g.n_workers.push_back(parse_number<std::size_t>(s, key));
      } else if (key == "r") {
        g.r.clear();
        for (const auto& s : items) g.r.push_back(parse_number<double>(s, key));
      } else if (key == "presets") {
        g.presets.clear();
        for (const auto& s : items) g.presets.push_back(parse_error_preset(s));
      } else if (key == "seeds") {
        g.seeds.clear();
        if (items.size() == 1) {
          const auto n = parse_number<std::uint64_t>(items[0], key);
          for (std::uint64_t s = 0; s < n; ++s) g.seeds.push_back(s);
        } else {
          for (const auto& s : items) g.seeds.push_back(parse_number<std::uint64_t>(s, key));
        }
      } else {
        throw ConfigError("unknown config key 'sweep." + key + "'");
      }
    }
  }
  std::ostringstream ini;
  pt::write_ini(ini, rest);
  parse_run_config(ini.str(), rc);  // validates [mas] and rejects strangers
  g.mas = rc.mas;
  if (g.seeds.empty()) throw ConfigError("sweep: no seeds");
  return g;
}

}  // namespace

SweepGrid parse_sweep_grid(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("sweep grid: ") + e.what());
  }
  return grid_from_tree(tree);
}

SweepGrid load_sweep_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sweep grid '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sweep_grid(ss.str());
}

}  // namespace distagg
