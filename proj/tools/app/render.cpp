#include "render.hpp"

#include <algorithm>
#include <cmath>

namespace stormflow::app {
namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

void fill_rect(io::RgbImage& img, long x0, long y0, long x1, long y1, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  x0 = std::max(x0, 0L);
  y0 = std::max(y0, 0L);
  x1 = std::min(x1, static_cast<long>(img.width));
  y1 = std::min(y1, static_cast<long>(img.height));
  for (long y = y0; y < y1; ++y) {
    for (long x = x0; x < x1; ++x) img.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), r, g, b);
  }
}

// Bresenham with a square pen.
void draw_line(io::RgbImage& img, long x0, long y0, long x1, long y1, int pen, std::uint8_t r, std::uint8_t g,
               std::uint8_t b) {
  const long dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  for (;;) {
    fill_rect(img, x0 - pen / 2, y0 - pen / 2, x0 - pen / 2 + pen, y0 - pen / 2 + pen, r, g, b);
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

io::RgbImage detection_overlay(const SatelliteFrame& ch4, const std::vector<DetectedVortex>& vortices) {
  const std::size_t w = ch4.pixels.width(), h = ch4.pixels.height();
  io::RgbImage img(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::uint8_t v = ch4.mask(x, y) ? to_byte(ch4.pixels(x, y)) : 0;
      img.set(x, y, v, v, v);
    }
  }
  constexpr double alpha = 0.55;
  for (const auto& d : vortices) {
    const double tr = d.prediction.label ? 1.0 : 0.0;
    const double tg = d.prediction.label ? 0.0 : 0.8;
    for (const auto& p : d.region.pixels) {
      if (p.x >= w || p.y >= h) continue;
      const double base = ch4.mask(p.x, p.y) ? ch4.pixels(p.x, p.y) : 0.0;
      img.set(p.x, p.y, to_byte((1 - alpha) * base + alpha * tr), to_byte((1 - alpha) * base + alpha * tg),
              to_byte((1 - alpha) * base));
    }
  }
  return img;
}

io::RgbImage lead_time_chart(const LeadTimeCurve& curve, std::size_t width, std::size_t height) {
  io::RgbImage img(width, height);
  std::fill(img.rgb.begin(), img.rgb.end(), std::uint8_t{255});

  std::vector<const LeadTimeBucket*> bars{&curve.ongoing};
  for (const auto& b : curve.buckets) bars.push_back(&b);
  bars.push_back(&curve.beyond);

  const long left = 40, right = static_cast<long>(width) - 20, top = 20, bottom = static_cast<long>(height) - 30;
  const long plot_w = right - left, plot_h = bottom - top;
  std::size_t max_count = 1;
  for (const auto* b : bars) max_count = std::max(max_count, b->count);

  // Axes and quarter gridlines.
  for (int q = 0; q <= 4; ++q) {
    const long y = bottom - plot_h * q / 4;
    draw_line(img, left, y, right, y, 1, 220, 220, 220);
  }
  draw_line(img, left, top, left, bottom, 2, 0, 0, 0);
  draw_line(img, left, bottom, right, bottom, 2, 0, 0, 0);

  const long slot = plot_w / static_cast<long>(bars.size());
  std::vector<std::pair<long, long>> points;
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const long x0 = left + slot * static_cast<long>(k);
    const long bar_h = static_cast<long>(std::lround(static_cast<double>(plot_h) * static_cast<double>(bars[k]->count) /
                                                     static_cast<double>(max_count)));
    const bool edge = k == 0 || k + 1 == bars.size();
    fill_rect(img, x0 + slot / 6, bottom - bar_h, x0 + slot - slot / 6, bottom, edge ? 150 : 90, edge ? 150 : 130,
              edge ? 170 : 200);
    // Tick under each bucket.
    draw_line(img, x0 + slot / 2, bottom, x0 + slot / 2, bottom + 5, 1, 0, 0, 0);
    if (const auto f = bars[k]->fraction()) {
      points.emplace_back(x0 + slot / 2, bottom - static_cast<long>(std::lround(static_cast<double>(plot_h) * *f)));
    }
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    draw_line(img, points[i - 1].first, points[i - 1].second, points[i].first, points[i].second, 2, 200, 30, 30);
  }
  for (const auto& [x, y] : points) fill_rect(img, x - 3, y - 3, x + 4, y + 4, 200, 30, 30);
  return img;
}

}  // namespace stormflow::app
