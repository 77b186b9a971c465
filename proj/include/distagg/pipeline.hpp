#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "distagg/dataset.hpp"
#include "distagg/merge.hpp"
#include "distagg/result.hpp"
#include "distagg/select.hpp"

namespace distagg {

/// Everything one aggregation run needs. Defaults are the published MAS
/// settings (K=3, phi=0.25, psi=0.025, 1500 iterations).
struct RunConfig {
  std::string method = "mas";
  std::string metric;  // empty: default for the task
  std::uint64_t seed = 0;
  MasConfig mas;
  MaddConfig madd;
  Statistic statistic = Statistic::median;  // dmr, pdmrr
  std::string weights_from;                 // dmr: "" or "none" = unweighted; pdmrr: "" = inner
  std::string inner = "mas";                // psr, pdmrr
  bool oracle_partition = false;
  double honeypot_fraction = 0.1;           // smas
  int ru_trials = 5;
};

/// Method names accepted by aggregate().
const std::vector<std::string>& method_names();

/// Runs one method over a dataset. Items with a single annotation get that
/// annotation flagged "degraded". Per-item merge failures are recorded on the
/// item; configuration problems throw ConfigError.
AggregationResult aggregate(const AnnotationDataset& dataset, const RunConfig& config);

/// Seeded choice of round(fraction * gold items) honeypots (at least 1).
std::vector<std::size_t> choose_honeypots(const AnnotationDataset& dataset, double fraction, std::uint64_t seed);

/// Applies an INI file ([run], [mas], [madd], [merge]) on top of `config`.
/// Unknown sections or keys are ConfigErrors.
void load_run_config(const std::filesystem::path& path, RunConfig& config);
/// Same, from INI text.
void parse_run_config(const std::string& text, RunConfig& config);

json run_config_to_json(const RunConfig& config);

/// Report header: config, seed and artifact version.
json report_header(const json& config, std::uint64_t seed);

/// One CSV row per item: item,label,worker,score,recipe,flags,error.
std::string result_to_csv(const AggregationResult& result);

/// Quotes a CSV field when needed.
std::string csv_field(const std::string& s);

}  // namespace distagg
