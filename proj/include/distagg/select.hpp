#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "distagg/dataset.hpp"

namespace distagg {

class Metric;

/// Per-slot scores of one selection method plus the chosen slot per item.
/// For epsilon methods lower is better; MADD stores posteriors (higher better).
struct Selection {
  std::string method;
  bool higher_is_better = false;
  std::vector<std::vector<double>> scores;  // [item][slot]
  std::vector<std::size_t> chosen;          // slot per item
};

/// Best slot of one item. Scores within a relative 1e-6 of each other count as
/// tied; ties go to the lexicographically smallest worker id, then slot order.
std::size_t pick_slot(const ItemDistances& item, const std::vector<double>& scores,
                      bool higher_is_better);

/// Fills `chosen` from `scores`.
void choose_all(const DistanceDataset& d, Selection& selection);

Selection aggregate_sad(const DistanceDataset& d);

/// Global mean distance of every worker over all pairs it takes part in; NaN
/// for workers with no pairs.
std::vector<double> bau_worker_scores(const DistanceDataset& d);
Selection aggregate_bau(const DistanceDataset& d);

// ---------------------------------------------------------------------------
// MAS

/// Starting point of the optimizer. uniform: embeddings, log delta and the
/// log likelihood scale drawn from U(-2, 2). mds: classical MDS of each item's
/// distances (less prone to the collapsed all-at-origin mode).
/// gamma always starts at the worker's BAU score.
enum class MasInit { uniform, mds };
std::string_view to_string(MasInit init);
MasInit parse_mas_init(std::string_view name);

struct MasConfig {
  int K = 3;
  double phi = 0.25;
  double psi = 0.025;
  int max_iter = 1500;
  std::uint64_t seed = 0;
  /// Lower bound on the likelihood scale; exact-match distances are often
  /// exactly embeddable, which would otherwise drive sigma to zero.
  double sigma_floor = 0.05;
  MasInit init = MasInit::uniform;
};

struct MasFit {
  MasConfig config;
  std::vector<std::vector<double>> x;  // [item][slot * K + k]
  std::vector<double> gamma;           // per worker
  std::vector<double> delta;           // per item
  double sigma = 1.0;
  std::vector<bool> worker_active;     // worker has at least one slot
  std::vector<bool> gamma_fixed;       // supervised scale (SMAS)
  std::vector<bool> gamma_uncovered;   // SMAS worker without gold coverage
  double log_posterior_initial = 0.0;  // up to an additive constant
  double log_posterior = 0.0;
  int iterations = 0;
  bool hit_max_iter = false;

  double epsilon(std::size_t item, std::size_t slot) const;
  double embedded_distance(std::size_t item, std::size_t a, std::size_t b) const;
  std::vector<std::vector<double>> epsilons() const;
  Selection selection(const DistanceDataset& d, const std::string& method = "mas") const;
};

/// MAP fit by L-BFGS. `fixed_gamma[u]`, when set, pins gamma_u and drops its
/// prior (the semi-supervised variant).
MasFit fit_mas(const DistanceDataset& d, const MasConfig& config,
               const std::vector<std::optional<double>>& fixed_gamma = {});

/// Mean honeypot distance per worker, floored at 1e-4; nullopt for workers
/// with no annotation on a honeypot item.
std::vector<std::optional<double>> honeypot_worker_error(const AnnotationDataset& dataset,
                                                         const Metric& metric,
                                                         const std::vector<std::size_t>& honeypots);

MasFit fit_smas(const DistanceDataset& d, const AnnotationDataset& dataset, const Metric& metric,
                const std::vector<std::size_t>& honeypots, const MasConfig& config);

// ---------------------------------------------------------------------------
// MADD

struct MaddConfig {
  int max_em_iter = 200;
  int max_mstep_iter = 200;
  double tol = 1e-10;  // relative change of the log posterior
};

struct MaddFit {
  std::vector<double> alpha;                  // per worker
  std::vector<double> beta;                   // per item
  std::vector<std::vector<double>> posterior; // [item][slot], sums to 1
  /// Observed-data log likelihood plus log prior after each EM iteration.
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;

  Selection selection(const DistanceDataset& d) const;
};

MaddFit fit_madd(const DistanceDataset& d, const MaddConfig& config = {});

/// Merge weight of a MADD posterior: 1 / -log p, p clamped to [1e-12, 1 - 1e-12].
double madd_weight(double posterior);

// ---------------------------------------------------------------------------
// Baselines over raw categorical annotations

/// Mode per item; ties go to the lexicographically smallest symbol.
std::vector<std::string> majority_vote(const AnnotationDataset& dataset);

struct DawidSkeneResult {
  std::vector<std::string> classes;    // the two symbols, sorted
  std::vector<double> posterior;       // P(item = classes[1])
  std::vector<std::string> labels;
  int iterations = 0;
};

/// Two-class Dawid-Skene EM initialized from majority vote. Throws DataError
/// when more than two symbols occur.
DawidSkeneResult dawid_skene_binary(const AnnotationDataset& dataset, int max_iter = 100);

/// Per trial, the chosen annotation index (within annotations_of(item)) per item.
std::vector<std::vector<std::size_t>> random_user(const AnnotationDataset& dataset,
                                                  std::uint64_t seed, int trials = 5);

}  // namespace distagg
