#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stormflow/field_analysis.hpp"
#include "stormflow/geo_imaging.hpp"
#include "stormflow/timeutil.hpp"

namespace stormflow {

enum class StormKind { Hail, Tornado, Wind, Other };

std::string_view to_string(StormKind k);
/// Case-insensitive; anything unrecognized is Other.
StormKind parse_storm_kind(std::string_view text);

struct StormReport {
  double lat = 0.0;
  double lon = 0.0;
  TimePoint start_time{};
  StormKind kind = StormKind::Other;

  bool operator==(const StormReport&) const = default;
};

/// Immutable, time-sorted report collection with a 1-degree bucket index.
class StormDB {
public:
  StormDB() = default;
  /// Sorts the reports (stable, by start time). When `coverage_years` is
  /// empty it is taken from the years present in the reports.
  explicit StormDB(std::vector<StormReport> reports, std::set<int> coverage_years = {});

  [[nodiscard]] const std::vector<StormReport>& reports() const noexcept { return reports_; }
  [[nodiscard]] const std::set<int>& coverage_years() const noexcept { return years_; }
  [[nodiscard]] std::size_t size() const noexcept { return reports_.size(); }
  [[nodiscard]] bool empty() const noexcept { return reports_.empty(); }

  /// Indices (time order within each bucket) of reports whose 1-degree
  /// bucket intersects the open box |lat - lat0| < half, |lon - lon0| < half.
  /// The caller applies the exact test.
  template <typename Fn>
  void for_each_bucket(double lat0, double lon0, double half, Fn&& fn) const;

  /// Indices of the reports in [from, to] (inclusive), in time order.
  [[nodiscard]] std::pair<std::size_t, std::size_t> time_range(TimePoint from, TimePoint to) const;

private:
  static std::int64_t key(long lat_bucket, long lon_bucket) {
    return (static_cast<std::int64_t>(lat_bucket) << 32) ^ static_cast<std::uint32_t>(lon_bucket);
  }

  std::vector<StormReport> reports_;
  std::set<int> years_;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> buckets_;
};

/// Reads a CSV with header columns time,lat,lon,kind (any order, extra
/// columns ignored). Errors name the offending line.
StormDB ingest_reports(const std::filesystem::path& csv_path, std::set<int> coverage_years = {});

/// Axis-aligned lon/lat box, boundaries inclusive.
struct GeoBox {
  double lon_min = -124.0;
  double lon_max = -60.0;
  double lat_min = 20.0;
  double lat_max = 52.0;

  [[nodiscard]] bool contains(double lon, double lat) const {
    return lon >= lon_min && lon <= lon_max && lat >= lat_min && lat <= lat_max;
  }
};

/// Region in which vortices receive labels: a box, optionally refined by a
/// polygon (even-odd rule, lon/lat vertices).
struct LabelDomain {
  GeoBox box;
  std::vector<GeoPoint> polygon;

  [[nodiscard]] bool contains(double lon, double lat) const;
};

/// Reads the first ring of a GeoJSON Polygon (bare geometry, Feature, or the
/// first feature of a FeatureCollection).
std::vector<GeoPoint> read_polygon(const std::filesystem::path& geojson_path);

/// Date-conditioned storm density on square cells laid out from the top-left
/// corner of `extent`: column i grows eastward, row j southward.
struct DensityGrid {
  CalendarDay date{};
  double cell_deg = 4.0;
  GeoBox extent;
  std::size_t cols = 0;
  std::size_t rows = 0;
  int window_days = 0;
  std::vector<std::uint32_t> counts;  // row-major, j * cols + i

  [[nodiscard]] std::uint32_t count(std::size_t i, std::size_t j) const { return counts[j * cols + i]; }
  [[nodiscard]] double rho(std::size_t i, std::size_t j) const {
    return static_cast<double>(count(i, j)) / static_cast<double>(window_days);
  }
  /// Cell holding (lon, lat). The eastern and southern extent edges belong to
  /// the last column and row.
  [[nodiscard]] std::optional<std::pair<std::size_t, std::size_t>> cell_of(double lon, double lat) const;
  /// Density at a location; 0 outside the grid.
  [[nodiscard]] double rho_at(double lon, double lat) const;
};

/// Counts reports within +/-5 calendar days of `date` in every coverage year,
/// divided by 11 * |coverage years|. A Feb-29 query uses Feb-28 in common years.
DensityGrid build_density_grid(const StormDB& db, CalendarDay date, const GeoBox& extent = {},
                               double cell_deg = 4.0);

/// CSV with header i,j,lon_min,lat_min,rho.
void write_density_csv(const DensityGrid& grid, const std::filesystem::path& path);

enum class Label { Negative, Positive, Unlabeled };

std::string_view to_string(Label l);

/// Positive when some report has |lat_i - lat| < 3, |lon_i - lon| < 3 and
/// t - 0.5h <= t_i <= t + 2h.
bool storm_near(const StormDB& db, double lat, double lon, TimePoint t);

/// Ground truth for a vortex; Unlabeled when its centroid is outside `domain`.
Label label_vortex(const StormDB& db, const VortexRegion& v, const LabelDomain& domain = {});

/// Earliest t_i with |lat_i - lat| < 3, |lon_i - lon| < 3 and t_i > t - 2h.
std::optional<TimePoint> earliest_storm_time(const StormDB& db, double lat, double lon, TimePoint t);

/// All positive indices plus an equally sized uniform sample of negative
/// indices, in ascending order. Throws DataError when negatives are short.
std::vector<std::size_t> balanced_indices(const std::vector<bool>& labels, std::uint64_t seed);

template <typename T>
std::vector<std::pair<T, bool>> sample_balanced_training(const std::vector<std::pair<T, bool>>& labeled,
                                                        std::uint64_t seed) {
  std::vector<bool> labels;
  labels.reserve(labeled.size());
  for (const auto& item : labeled) labels.push_back(item.second);
  std::vector<std::pair<T, bool>> out;
  for (std::size_t i : balanced_indices(labels, seed)) out.push_back(labeled[i]);
  return out;
}

template <typename Fn>
void StormDB::for_each_bucket(double lat0, double lon0, double half, Fn&& fn) const {
  const auto lo_lat = static_cast<long>(std::floor(lat0 - half));
  const auto hi_lat = static_cast<long>(std::floor(lat0 + half));
  const auto lo_lon = static_cast<long>(std::floor(lon0 - half));
  const auto hi_lon = static_cast<long>(std::floor(lon0 + half));
  for (long a = lo_lat; a <= hi_lat; ++a) {
    for (long b = lo_lon; b <= hi_lon; ++b) {
      const auto it = buckets_.find(key(a, b));
      if (it != buckets_.end()) fn(it->second);
    }
  }
}

}  // namespace stormflow
