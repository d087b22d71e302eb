#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stormflow/grid.hpp"
#include "stormflow/timeutil.hpp"

namespace stormflow {

enum class Channel { Ch3, Ch4 };

std::string_view to_string(Channel c);
Channel parse_channel(std::string_view text);

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;
  bool operator==(const GeoPoint&) const = default;
};

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const PixelPoint&) const = default;
};

/// Equirectangular pixel grid. Row 0 is the northern edge; the origin is the
/// outer corner of pixel (0,0), so pixel centers sit at half-pixel offsets.
struct GeoTransform {
  double lon_origin = 0.0;
  double lat_origin = 0.0;
  double dlon = 1.0;
  double dlat = -1.0;
  std::size_t width = 0;
  std::size_t height = 0;

  /// Throws ConfigError when the grid is degenerate or leaves the globe.
  void validate() const;

  bool operator==(const GeoTransform&) const = default;
};

/// Geographic location of a pixel center (fractional indices allowed).
GeoPoint pixel_to_geo(const GeoTransform& t, double x, double y);
/// Inverse of pixel_to_geo.
PixelPoint geo_to_pixel(const GeoTransform& t, double lon, double lat);
/// Location of a pixel corner; x in [0,width], y in [0,height]. Unchecked.
GeoPoint corner_to_geo(const GeoTransform& t, double x, double y);

/// One channel of one satellite scan, brightness scaled to [0,1].
struct SatelliteFrame {
  Channel channel = Channel::Ch4;
  Grid<double> pixels;
  Mask mask;  // 1 = valid
  TimePoint timestamp{};
  GeoTransform transform;

  void validate() const;
  [[nodiscard]] std::size_t valid_count() const;
};

struct FrameMetadata {
  Channel channel = Channel::Ch4;
  TimePoint timestamp{};
  GeoTransform transform;
  std::optional<double> nodata;
};

FrameMetadata read_metadata(const std::filesystem::path& meta_path);
void write_metadata(const std::filesystem::path& meta_path, const FrameMetadata& meta);

/// Loads a PNG (8/16-bit gray) or raw ".f32" brightness grid plus its JSON
/// sidecar. Integer codes are divided by full scale; nodata pixels are masked.
SatelliteFrame load_frame(const std::filesystem::path& image_path,
                          const std::filesystem::path& meta_path);

/// Writes the frame as ".f32" or ".png" (16-bit) depending on the image
/// extension. Masked pixels are stored as NaN (f32) or code 0 with nodata=0 (png).
void save_frame(const SatelliteFrame& frame, const std::filesystem::path& image_path,
                const std::filesystem::path& meta_path);

struct FramePair {
  SatelliteFrame ch3;
  SatelliteFrame ch4;
  [[nodiscard]] TimePoint timestamp() const { return ch4.timestamp; }
};

/// Time-ordered channel pairs on one grid with near-uniform spacing.
class FrameSequence {
public:
  /// Validates ordering, channel assignment, shared transform, and that each
  /// spacing is within 10% of `nominal_spacing`.
  FrameSequence(std::vector<FramePair> pairs, std::chrono::seconds nominal_spacing);

  [[nodiscard]] const std::vector<FramePair>& pairs() const noexcept { return pairs_; }
  [[nodiscard]] std::size_t size() const noexcept { return pairs_.size(); }
  [[nodiscard]] std::chrono::seconds nominal_spacing() const noexcept { return spacing_; }
  [[nodiscard]] const GeoTransform& transform() const { return pairs_.front().ch4.transform; }

private:
  std::vector<FramePair> pairs_;
  std::chrono::seconds spacing_;
};

/// Monotone brightness remapping learned from one frame's histogram.
class EqualizationMap {
public:
  static constexpr std::size_t kBins = 256;

  /// Fits the empirical CDF over the valid pixels of `reference`.
  static EqualizationMap fit(const SatelliteFrame& reference);

  [[nodiscard]] static std::size_t bin_of(double v);
  [[nodiscard]] double apply(double v) const { return levels_[bin_of(v)]; }
  [[nodiscard]] const std::array<double, kBins>& levels() const noexcept { return levels_; }

  /// Remaps valid pixels; masked pixels are written as 0.
  [[nodiscard]] SatelliteFrame apply(const SatelliteFrame& frame) const;

private:
  std::array<double, kBins> levels_{};
};

/// Fits one mapping on `prev` and applies it to both frames.
std::pair<SatelliteFrame, SatelliteFrame> equalize_pair(const SatelliteFrame& prev,
                                                        const SatelliteFrame& next);

}  // namespace stormflow
