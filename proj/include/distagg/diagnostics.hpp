#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "distagg/json_io.hpp"
#include "distagg/select.hpp"

namespace distagg {

/// nullopt for fewer than 2 points or a constant side. Throws DataError on
/// length mismatch.
std::optional<double> pearson(const std::vector<double>& xs, const std::vector<double>& ys);
/// Population standard deviation; NaN for an empty input.
double stddev(const std::vector<double>& xs);

enum class DiagStatus { pass, fail, not_applicable };
std::string_view to_string(DiagStatus s);
DiagStatus parse_diag_status(std::string_view name);

struct DiagnosticEntry {
  std::string name;
  std::string inputs;        // what the statistic was computed over
  std::string statistic_name;  // "rho" or "sd"
  double statistic = std::numeric_limits<double>::quiet_NaN();
  double threshold = 0.0;
  DiagStatus status = DiagStatus::not_applicable;
  std::string note;
  json data = json::object();  // scatter or histogram for rendering
};

struct DiagnosticReport {
  std::vector<DiagnosticEntry> tests;
  bool any_failed() const;
  json to_json() const;
  static DiagnosticReport from_json(const json& j);
};

/// rho over workers between gamma and `reference` (BAU scores or true
/// simulated error); NaN reference entries are skipped. Pass iff rho >= 0.5.
DiagnosticEntry test1_worker_error(const MasFit& fit, const std::vector<double>& reference,
                                   const std::string& reference_name);

/// rho over labels between gamma_u and eps_mas - eps_sad. Pass iff >= 0.2.
DiagnosticEntry test2_weight_application(const MasFit& fit, const DistanceDataset& d);

/// rho over stored pairs between embedded and observed distance. Pass iff >= 0.8.
DiagnosticEntry test3_distance_fit(const MasFit& fit, const DistanceDataset& d);

/// sd of all per-label epsilons. Pass iff > 0.05.
DiagnosticEntry test4_prediction_health(const MasFit& fit);

/// Pass iff sd(gamma) of the scarce fit < sd(gamma) of the abundant fit.
DiagnosticEntry test5_scarcity_shrinkage(const MasFit& scarce, const MasFit& abundant);

/// Pass iff rho(eps_sad, eps_mas at the default phi) is below
/// rho(eps_sad, eps_mas at a small phi) by more than 1e-6.
DiagnosticEntry test6_weight_confidence(const std::vector<double>& eps_sad,
                                        const std::vector<double>& eps_mas_default,
                                        const std::vector<double>& eps_mas_small_phi);

struct DiagnoseOptions {
  /// True worker error by worker id (simulated data).
  std::map<std::string, double> sim_sigma;
  bool run_scarcity = true;    // paired binary simulations at 2 and 6 workers/item
  bool run_weight_confidence = true;  // refit at small phi
  double small_phi = 0.01;
};

/// All six tests for one fit. Test 5 runs its own paired simulations with the
/// fit's configuration; test 6 refits `d` at the small phi.
DiagnosticReport diagnose(const DistanceDataset& d, const MasFit& fit, const DiagnoseOptions& options = {});

json mas_fit_to_json(const MasFit& fit, const DistanceDataset& d);
/// Checks that `j` was fitted on a distance dataset shaped like `d`.
MasFit mas_fit_from_json(const json& j, const DistanceDataset& d);

}  // namespace distagg
