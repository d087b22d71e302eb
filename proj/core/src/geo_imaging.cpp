#include "stormflow/geo_imaging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "stormflow/raster_io.hpp"

namespace stormflow {

using nlohmann::json;

std::string_view to_string(Channel c) { return c == Channel::Ch3 ? "ch3" : "ch4"; }

Channel parse_channel(std::string_view text) {
  if (text == "ch3" || text == "Ch3" || text == "CH3" || text == "3") return Channel::Ch3;
  if (text == "ch4" || text == "Ch4" || text == "CH4" || text == "4") return Channel::Ch4;
  throw DataError("unknown channel '" + std::string(text) + "'");
}

void GeoTransform::validate() const {
  if (width == 0 || height == 0) throw ConfigError("geo transform has zero size");
  if (!(dlon > 0.0) || !(dlat < 0.0)) {
    throw ConfigError("geo transform requires dlon > 0 and dlat < 0");
  }
  const double lon_end = lon_origin + static_cast<double>(width) * dlon;
  const double lat_end = lat_origin + static_cast<double>(height) * dlat;
  const double eps = 1e-9;
  if (lon_origin < -180.0 - eps || lon_end > 180.0 + eps || lat_origin > 90.0 + eps ||
      lat_end < -90.0 - eps) {
    throw ConfigError("geo transform extends beyond [-180,180]x[-90,90]");
  }
}

GeoPoint pixel_to_geo(const GeoTransform& t, double x, double y) {
  if (!(x >= 0.0 && x < static_cast<double>(t.width) && y >= 0.0 &&
        y < static_cast<double>(t.height))) {
    throw DataError("pixel index out of range");
  }
  return {t.lon_origin + (x + 0.5) * t.dlon, t.lat_origin + (y + 0.5) * t.dlat};
}

PixelPoint geo_to_pixel(const GeoTransform& t, double lon, double lat) {
  PixelPoint p{(lon - t.lon_origin) / t.dlon - 0.5, (lat - t.lat_origin) / t.dlat - 0.5};
  // Same domain as pixel_to_geo, with slack for rounding at the low edge.
  constexpr double slack = 1e-9;
  if (!(p.x >= -slack && p.x < static_cast<double>(t.width) && p.y >= -slack &&
        p.y < static_cast<double>(t.height))) {
    throw DataError("geographic location outside the grid");
  }
  p.x = std::max(p.x, 0.0);
  p.y = std::max(p.y, 0.0);
  return p;
}

GeoPoint corner_to_geo(const GeoTransform& t, double x, double y) {
  return {t.lon_origin + x * t.dlon, t.lat_origin + y * t.dlat};
}

void SatelliteFrame::validate() const {
  transform.validate();
  if (!pixels.same_shape(transform.width, transform.height) ||
      !mask.same_shape(transform.width, transform.height)) {
    throw DataError("frame grids do not match the declared transform");
  }
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (mask[i] && !(pixels[i] >= 0.0 && pixels[i] <= 1.0)) {
      throw DataError("valid frame pixel outside [0,1]");
    }
  }
}

std::size_t SatelliteFrame::valid_count() const {
  return static_cast<std::size_t>(std::count(mask.values().begin(), mask.values().end(), 1));
}

FrameMetadata read_metadata(const std::filesystem::path& meta_path) {
  std::ifstream in(meta_path);
  if (!in) throw DataError("cannot open metadata '" + meta_path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed metadata '" + meta_path.string() + "': " + e.what());
  }
  auto field = [&](const char* name) -> const json& {
    if (!j.contains(name)) {
      throw DataError("metadata '" + meta_path.string() + "' is missing field '" + name + "'");
    }
    return j.at(name);
  };
  FrameMetadata m;
  try {
    m.channel = parse_channel(field("channel").get<std::string>());
    m.timestamp = parse_utc(field("timestamp").get<std::string>());
    m.transform.lon_origin = field("lon_origin").get<double>();
    m.transform.lat_origin = field("lat_origin").get<double>();
    m.transform.dlon = field("dlon").get<double>();
    m.transform.dlat = field("dlat").get<double>();
    m.transform.width = field("width").get<std::size_t>();
    m.transform.height = field("height").get<std::size_t>();
    if (j.contains("nodata") && !j.at("nodata").is_null()) m.nodata = j.at("nodata").get<double>();
  } catch (const json::exception& e) {
    throw DataError("bad metadata field in '" + meta_path.string() + "': " + e.what());
  }
  try {
    m.transform.validate();
  } catch (const ConfigError& e) {
    throw DataError("metadata '" + meta_path.string() + "': " + e.what());
  }
  return m;
}

void write_metadata(const std::filesystem::path& meta_path, const FrameMetadata& meta) {
  json j;
  j["channel"] = to_string(meta.channel);
  j["timestamp"] = format_utc(meta.timestamp);
  j["lon_origin"] = meta.transform.lon_origin;
  j["lat_origin"] = meta.transform.lat_origin;
  j["dlon"] = meta.transform.dlon;
  j["dlat"] = meta.transform.dlat;
  j["width"] = meta.transform.width;
  j["height"] = meta.transform.height;
  if (meta.nodata) j["nodata"] = *meta.nodata;
  std::ofstream out(meta_path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + meta_path.string() + "'");
  out << j.dump(2) << '\n';
}

SatelliteFrame load_frame(const std::filesystem::path& image_path,
                          const std::filesystem::path& meta_path) {
  const FrameMetadata meta = read_metadata(meta_path);
  const auto& t = meta.transform;

  io::RawRaster raw;
  if (image_path.extension() == ".f32") {
    raw.values = io::read_f32(image_path, t.width, t.height);
    raw.max_value = 1.0;
  } else {
    raw = io::read_png_gray(image_path);
  }
  if (!raw.values.same_shape(t.width, t.height)) {
    throw DataError("dimension mismatch: '" + image_path.string() + "' is " +
                    std::to_string(raw.values.width()) + "x" +
                    std::to_string(raw.values.height()) + " but metadata declares " +
                    std::to_string(t.width) + "x" + std::to_string(t.height));
  }

  SatelliteFrame f;
  f.channel = meta.channel;
  f.timestamp = meta.timestamp;
  f.transform = t;
  f.pixels = Grid<double>(t.width, t.height);
  f.mask = Mask(t.width, t.height, 1);
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    const double code = raw.values[i];
    if (!std::isfinite(code) || (meta.nodata && code == *meta.nodata)) {
      f.mask[i] = 0;
      f.pixels[i] = 0.0;
      continue;
    }
    f.pixels[i] = std::clamp(code / raw.max_value, 0.0, 1.0);
  }
  return f;
}

void save_frame(const SatelliteFrame& frame, const std::filesystem::path& image_path,
                const std::filesystem::path& meta_path) {
  FrameMetadata meta{frame.channel, frame.timestamp, frame.transform, std::nullopt};
  Grid<double> out = frame.pixels;
  if (image_path.extension() == ".f32") {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!frame.mask[i]) out[i] = std::numeric_limits<double>::quiet_NaN();
    }
    io::write_f32(image_path, out);
  } else {
    const bool has_invalid = frame.valid_count() != frame.mask.size();
    constexpr double kStep = 1.0 / 65535.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!frame.mask[i]) {
        out[i] = 0.0;
      } else if (has_invalid) {
        out[i] = std::max(out[i], kStep);  // code 0 is reserved for nodata
      }
    }
    if (has_invalid) meta.nodata = 0.0;
    io::write_png_gray16(image_path, out);
  }
  write_metadata(meta_path, meta);
}

FrameSequence::FrameSequence(std::vector<FramePair> pairs, std::chrono::seconds nominal_spacing)
    : pairs_(std::move(pairs)), spacing_(nominal_spacing) {
  if (pairs_.empty()) throw DataError("frame sequence is empty");
  if (spacing_.count() <= 0) throw ConfigError("nominal spacing must be positive");
  const GeoTransform& t = pairs_.front().ch4.transform;
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const auto& p = pairs_[k];
    if (p.ch3.channel != Channel::Ch3 || p.ch4.channel != Channel::Ch4) {
      throw DataError("frame pair " + std::to_string(k) + " has wrong channel assignment");
    }
    if (!(p.ch3.transform == t) || !(p.ch4.transform == t)) {
      throw DataError("frame pair " + std::to_string(k) + " does not share the sequence grid");
    }
    if (k == 0) continue;
    const auto gap = p.timestamp() - pairs_[k - 1].timestamp();
    if (gap.count() <= 0) throw DataError("frame timestamps are not strictly increasing");
    const double rel = std::abs(static_cast<double>(gap.count() - spacing_.count())) /
                       static_cast<double>(spacing_.count());
    if (rel > 0.10) {
      throw DataError("frame spacing before " + format_utc(p.timestamp()) +
                      " deviates from nominal by more than 10%");
    }
  }
}

std::size_t EqualizationMap::bin_of(double v) {
  if (!(v > 0.0)) return 0;
  const auto b = static_cast<std::size_t>(v * static_cast<double>(kBins));
  return std::min(b, kBins - 1);
}

EqualizationMap EqualizationMap::fit(const SatelliteFrame& reference) {
  std::array<std::size_t, kBins> hist{};
  std::size_t total = 0;
  for (std::size_t i = 0; i < reference.pixels.size(); ++i) {
    if (!reference.mask[i]) continue;
    ++hist[bin_of(reference.pixels[i])];
    ++total;
  }
  if (total == 0) throw DataError("cannot equalize a frame with no valid pixels");
  EqualizationMap m;
  std::size_t running = 0;
  for (std::size_t b = 0; b < kBins; ++b) {
    running += hist[b];
    m.levels_[b] = static_cast<double>(running) / static_cast<double>(total);
  }
  return m;
}

SatelliteFrame EqualizationMap::apply(const SatelliteFrame& frame) const {
  SatelliteFrame out = frame;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = frame.mask[i] ? apply(frame.pixels[i]) : 0.0;
  }
  return out;
}

std::pair<SatelliteFrame, SatelliteFrame> equalize_pair(const SatelliteFrame& prev,
                                                        const SatelliteFrame& next) {
  if (prev.channel != next.channel) throw DataError("equalize_pair: channel mismatch");
  if (!(prev.transform == next.transform)) throw DataError("equalize_pair: transform mismatch");
  const auto map = EqualizationMap::fit(prev);
  return {map.apply(prev), map.apply(next)};
}

}  // namespace stormflow
