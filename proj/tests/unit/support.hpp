#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>

#include "stormflow/field_analysis.hpp"
#include "stormflow/geo_imaging.hpp"
#include "stormflow/optical_flow.hpp"
#include "stormflow/synthetic.hpp"

namespace testing_support {

using namespace stormflow;

/// Scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("stormflow_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
  std::filesystem::path path_;
};

inline TimePoint at(const char* text) { return parse_utc(text); }

inline SatelliteFrame frame_from(const Grid<double>& pixels, Channel ch = Channel::Ch4, TimePoint t = {},
                                 GeoTransform tr = {}) {
  SatelliteFrame f;
  f.channel = ch;
  f.pixels = pixels;
  f.mask = Mask(pixels.width(), pixels.height(), 1);
  f.timestamp = t;
  if (tr.width == 0) tr = synthetic::conus_domain(pixels.width(), pixels.height());
  f.transform = tr;
  return f;
}

/// Flow from a closed form, all pixels valid.
inline FlowField field_from(std::size_t w, std::size_t h, const std::function<std::pair<double, double>(double, double)>& fn) {
  FlowField f = FlowField::zeros(synthetic::conus_domain(w, h));
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto [u, v] = fn(static_cast<double>(x), static_cast<double>(y));
      f.u(x, y) = u;
      f.v(x, y) = v;
    }
  }
  return f;
}

/// Largest |g| over pixels at least `margin` from every edge.
inline double interior_max_abs(const Grid<double>& g, std::size_t margin, double offset = 0.0) {
  double m = 0.0;
  for (std::size_t y = margin; y + margin < g.height(); ++y) {
    for (std::size_t x = margin; x + margin < g.width(); ++x) m = std::max(m, std::abs(g(x, y) - offset));
  }
  return m;
}

inline double max_abs_flow(const FlowField& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.u.size(); ++i) m = std::max(m, std::hypot(f.u[i], f.v[i]));
  return m;
}

}  // namespace testing_support
