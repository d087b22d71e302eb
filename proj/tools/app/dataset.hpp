#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stormflow/geo_imaging.hpp"

namespace stormflow::app {

enum class Scenario {
  Rankine,  // one vortex at the domain center
  Shear,    // uniform shear, no vortex
  Still,    // identical frames
  Storms,   // several vortices per day, half of them with storm reports
};

Scenario parse_scenario(const std::string& name);

struct DatasetSpec {
  Scenario scenario = Scenario::Rankine;
  std::uint64_t seed = 1;
  std::size_t width = 256;
  std::size_t height = 256;
  /// Frames per day (Rankine/Shear/Still use the first day only).
  std::size_t frames = 2;
  /// Days of the month rendered for Storms.
  std::vector<int> days{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 18, 19, 20, 21, 22};
  int year = 2008;
  int month = 6;
  double omega = 0.1;
  double core_radius = 10.0;
  double gamma = 0.02;
  /// Vortices per day for Storms.
  int vortices = 4;
};

struct TruthVortex {
  TimePoint t_next{};
  PixelPoint center;
  GeoPoint center_geo;
  double omega = 0.0;
  bool storm = false;
};

/// Writes ch3/ and ch4/ frames (".f32" plus sidecars), storms.csv,
/// truth.csv and config.json under `dir`. Returns the truth table.
std::vector<TruthVortex> write_dataset(const DatasetSpec& spec, const std::filesystem::path& dir);

}  // namespace stormflow::app
