#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "distagg/select.hpp"
#include "distagg/simulate.hpp"

namespace distagg {

struct SweepGrid {
  std::vector<SimTask> tasks{SimTask::binary, SimTask::ranking, SimTask::keypoints};
  std::vector<std::size_t> n_items{300, 400};
  std::vector<std::size_t> n_workers{10, 14, 21, 28};
  std::vector<double> r{0.3, 0.4, 0.5};
  std::vector<ErrorPreset> presets{ErrorPreset::uniform, ErrorPreset::centered, ErrorPreset::easy_skew,
                                   ErrorPreset::difficult_skew};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  MasConfig mas;

  /// Cells in task, N, J, r, preset order.
  std::vector<SimConfig> cells() const;
};

/// Per-cell means over seeds. DS and MV are binary only (NaN otherwise).
struct SweepRow {
  SimConfig config;
  std::size_t seeds_ok = 0;
  std::size_t seeds_failed = 0;
  double sad = std::numeric_limits<double>::quiet_NaN();
  double mas = std::numeric_limits<double>::quiet_NaN();
  double ds = std::numeric_limits<double>::quiet_NaN();
  double mv = std::numeric_limits<double>::quiet_NaN();
  double workers_per_item = std::numeric_limits<double>::quiet_NaN();
  double rho = std::numeric_limits<double>::quiet_NaN();    // gamma vs true sigma
  double alpha = std::numeric_limits<double>::quiet_NaN();  // Krippendorff
  std::string error;  // first failure message
};

/// One seed of one cell; throws on failure.
SweepRow run_cell(const SimConfig& config, const MasConfig& mas);

struct SweepOptions {
  unsigned threads = 1;
  /// Called after each finished cell with (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Runs every cell over the grid's seeds; failed seeds are counted and the
/// sweep continues. Rows come back in cell order whatever the thread count.
std::vector<SweepRow> run_sweep(const SweepGrid& grid, const SweepOptions& options = {});

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

/// [sweep] section: comma lists tasks, n, j, r, presets, seeds (a list, or a
/// single count meaning 0..count-1). A [mas] section overrides model settings.
SweepGrid load_sweep_grid(const std::filesystem::path& path);
SweepGrid parse_sweep_grid(const std::string& ini_text);

}  // namespace distagg
