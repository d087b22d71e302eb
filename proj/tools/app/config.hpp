#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <vector>

#include "stormflow/descriptors.hpp"
#include "stormflow/evaluation.hpp"
#include "stormflow/forest.hpp"
#include "stormflow/timeutil.hpp"

namespace stormflow::app {

/// Days of the month [first_day, last_day] and UTC hours [hour_begin, hour_end).
struct DateWindow {
  int first_day = 1;
  int last_day = 31;
  int hour_begin = 0;
  int hour_end = 24;

  [[nodiscard]] bool contains(TimePoint t) const;
};

struct SplitConfig {
  DateWindow window;
  /// Precomputed descriptor table; skips frame processing when set.
  std::optional<std::filesystem::path> descriptors;
  /// Draw as many negatives as positives before fitting or scoring.
  bool balanced = true;
};

struct PipelineConfig {
  std::filesystem::path source;  // the config file itself
  std::filesystem::path ch3_dir;
  std::filesystem::path ch4_dir;
  std::optional<std::filesystem::path> storm_csv;
  std::set<int> coverage_years;
  std::chrono::seconds spacing{1800};
  std::chrono::seconds max_channel_skew{120};
  /// Frames loaded at once per contiguous run.
  std::size_t chunk_frames = 16;

  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> cache_dir;
  bool write_rasters = true;

  std::uint64_t seed = 42;
  ExtractConfig extract;
  ForestConfig forest;
  int folds = 10;
  bool ablation = true;
  SplitConfig train{{1, 10, 0, 24}, std::nullopt, true};
  SplitConfig test{{18, 22, 0, 24}, std::nullopt, false};
  std::vector<double> lead_time_edges;
};

/// Parses a JSON config. Relative paths resolve against the config file's
/// directory. Unknown keys, bad values and missing input paths raise
/// ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace stormflow::app
