#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "distagg/dataset.hpp"
#include "distagg/json_io.hpp"

namespace distagg {

enum class SimTask { binary, ranking, keypoints };
enum class ErrorPreset { uniform, centered, easy_skew, difficult_skew };

std::string_view to_string(SimTask task);
std::string_view to_string(ErrorPreset preset);
SimTask parse_sim_task(std::string_view name);
ErrorPreset parse_error_preset(std::string_view name);

/// Beta(a, b) parameters of a worker-error preset.
std::pair<double, double> beta_params(ErrorPreset preset);

/// Corruption magnitudes for simulated keypoints, each multiplied by sigma_u:
/// per-vertex offset sd (fraction of skeleton scale), rotation sd (radians),
/// log-scale sd, and skeleton omission probability.
struct KeypointNoise {
  double translation = 1.5;
  double rotation = 1.0;
  double log_scale = 1.0;
  double omission = 0.8;
};

struct SimConfig {
  SimTask task = SimTask::binary;
  std::size_t n_items = 300;
  std::size_t n_workers = 10;
  double r = 0.5;  // fraction of workers annotating each item
  ErrorPreset preset = ErrorPreset::uniform;
  std::uint64_t seed = 0;
  double gold_p = 0.5;  // binary: P(gold = "1")
  KeypointNoise keypoint_noise{};

  /// round(r * J); throws ConfigError when below 2 or above J.
  std::size_t workers_per_item() const;
};

struct SimTruth {
  std::map<std::string, double> worker_sigma;
  std::map<std::string, double> item_sigma;                          // rankings
  std::map<std::string, std::map<std::string, double>> element_score;  // rankings
};

json truth_to_json(const SimTruth& truth);
/// Reads the maps written by truth_to_json; missing maps stay empty.
SimTruth truth_from_json(const json& j);

struct SimData {
  AnnotationDataset dataset;  // gold for every item
  SimTruth truth;
};

SimData simulate(const SimConfig& config);
SimData simulate_binary(const SimConfig& config);
SimData simulate_rankings(const SimConfig& config);
SimData simulate_keypoints(const SimConfig& config);

/// Elements per simulated ranking item and length of each ranking.
inline constexpr std::size_t kRankingUniverse = 50;
inline constexpr std::size_t kRankingDepth = 10;

/// Metric name used to score each simulated task.
std::string sim_metric(SimTask task);

/// Worker sigma aligned to dataset.worker_ids().
std::vector<double> worker_sigma_vector(const SimData& data);

}  // namespace distagg
