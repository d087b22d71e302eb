#include "stormflow/synthetic.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "stormflow/spectral.hpp"

namespace stormflow::synthetic {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::pair<double, double> evaluate(const Component& c, double x, double y) {
  return std::visit(
      Overloaded{
          [&](const RigidRotation& r) -> std::pair<double, double> {
            return {-r.omega * (y - r.center.y), r.omega * (x - r.center.x)};
          },
          [&](const Rankine& r) -> std::pair<double, double> {
            const double dx = x - r.center.x;
            const double dy = y - r.center.y;
            const double rr = dx * dx + dy * dy;
            const double r2 = r.core_radius * r.core_radius;
            const double scale = rr <= r2 ? r.omega : r.omega * r2 / rr;
            return {-scale * dy, scale * dx};
          },
          [&](const Shear& s) -> std::pair<double, double> { return {s.gamma * (y - s.y0), 0.0}; },
          [&](const Translation& t) -> std::pair<double, double> { return {t.u, t.v}; },
          [&](const Radial& r) -> std::pair<double, double> {
            return {r.rate * (x - r.center.x), r.rate * (y - r.center.y)};
          },
      },
      c);
}

double wrap_coord(double v, double extent) {
  v = std::fmod(v, extent);
  return v < 0.0 ? v + extent : v;
}

}  // namespace

std::pair<double, double> AnalyticField::velocity(double x, double y) const {
  double u = 0.0, v = 0.0;
  for (const auto& c : components) {
    const auto [cu, cv] = evaluate(c, x, y);
    u += cu;
    v += cv;
  }
  return {u, v};
}

FlowField sample_field(const AnalyticField& a, TimePoint t_prev, TimePoint t_next) {
  FlowField f = FlowField::zeros(a.domain, t_prev, t_next);
  for (std::size_t y = 0; y < f.height(); ++y) {
    for (std::size_t x = 0; x < f.width(); ++x) {
      const auto [u, v] = a.velocity(static_cast<double>(x), static_cast<double>(y));
      f.u(x, y) = u;
      f.v(x, y) = v;
    }
  }
  return f;
}

FlowField discrete_gradient(const std::function<double(double, double)>& potential,
                            const GeoTransform& domain) {
  FlowField f = FlowField::zeros(domain);
  for (std::size_t y = 0; y < f.height(); ++y) {
    for (std::size_t x = 0; x < f.width(); ++x) {
      const double fx = static_cast<double>(x);
      const double fy = static_cast<double>(y);
      f.u(x, y) = 0.5 * (potential(fx + 1.0, fy) - potential(fx - 1.0, fy));
      f.v(x, y) = 0.5 * (potential(fx, fy + 1.0) - potential(fx, fy - 1.0));
    }
  }
  return f;
}

FlowField random_smooth_field(std::uint64_t seed, const GeoTransform& domain, int modes,
                              double min_wavelength) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Mode {
    double kx, ky, phase, amp;
  };
  const double kmax = 2.0 * std::numbers::pi / min_wavelength;
  auto draw = [&] {
    std::vector<Mode> out;
    for (int i = 0; i < modes; ++i) {
      const double k = kmax * (0.1 + 0.9 * unit(rng));
      const double angle = 2.0 * std::numbers::pi * unit(rng);
      out.push_back({k * std::cos(angle), k * std::sin(angle), 2.0 * std::numbers::pi * unit(rng),
                     0.5 + unit(rng)});
    }
    return out;
  };
  const auto mu = draw();
  const auto mv = draw();
  FlowField f = FlowField::zeros(domain);
  for (std::size_t y = 0; y < f.height(); ++y) {
    for (std::size_t x = 0; x < f.width(); ++x) {
      double u = 0.0, v = 0.0;
      for (const auto& m : mu) u += m.amp * std::sin(m.kx * x + m.ky * y + m.phase);
      for (const auto& m : mv) v += m.amp * std::sin(m.kx * x + m.ky * y + m.phase);
      f.u(x, y) = u;
      f.v(x, y) = v;
    }
  }
  return f;
}

Grid<double> band_limited_texture(std::uint64_t seed, std::size_t width, std::size_t height) {
  constexpr double kCutoff = 0.125;  // cycles per pixel, a quarter of Nyquist
  constexpr double kRolloff = 0.03;
  const std::size_t half = width / 2 + 1;
  std::vector<std::complex<double>> spectrum(height * half);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t n = 0; n < height; ++n) {
    const double fy =
        static_cast<double>(n <= height / 2 ? static_cast<long>(n) : static_cast<long>(n) - static_cast<long>(height)) /
        static_cast<double>(height);
    for (std::size_t m = 0; m < half; ++m) {
      const double fx = static_cast<double>(m) / static_cast<double>(width);
      const double f = std::hypot(fx, fy);
      const double re = normal(rng);
      const double im = normal(rng);
      if (f == 0.0) continue;
      const double amp = f <= kCutoff ? 1.0 : std::exp(-std::pow((f - kCutoff) / kRolloff, 2));
      spectrum[n * half + m] = amp * std::complex<double>(re, im);
    }
  }
  std::vector<double> real(width * height);
  {
    std::lock_guard lock(spectral::planner_mutex());
    fftw_plan plan = fftw_plan_dft_c2r_2d(static_cast<int>(height), static_cast<int>(width),
                                          reinterpret_cast<fftw_complex*>(spectrum.data()),
                                          real.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  const auto [lo, hi] = std::minmax_element(real.begin(), real.end());
  const double span = *hi - *lo;
  Grid<double> out(width, height);
  for (std::size_t i = 0; i < real.size(); ++i) {
    out[i] = span > 0.0 ? 0.1 + 0.8 * (real[i] - *lo) / span : 0.5;
  }
  return out;
}

Grid<double> warp_periodic(const Grid<double>& image, const FlowField& flow) {
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  const double fw = static_cast<double>(w);
  const double fh = static_cast<double>(h);
  Grid<double> out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double sx = wrap_coord(static_cast<double>(x) - flow.u(x, y), fw);
      const double sy = wrap_coord(static_cast<double>(y) - flow.v(x, y), fh);
      const auto x0 = static_cast<std::size_t>(sx) % w;
      const auto y0 = static_cast<std::size_t>(sy) % h;
      const std::size_t x1 = (x0 + 1) % w;
      const std::size_t y1 = (y0 + 1) % h;
      const double ax = sx - std::floor(sx);
      const double ay = sy - std::floor(sy);
      if (ax == 0.0 && ay == 0.0) {
        out(x, y) = image(x0, y0);
        continue;
      }
      out(x, y) = (1.0 - ay) * ((1.0 - ax) * image(x0, y0) + ax * image(x1, y0)) +
                  ay * ((1.0 - ax) * image(x0, y1) + ax * image(x1, y1));
    }
  }
  return out;
}

namespace {

SatelliteFrame make_frame(Grid<double> pixels, Channel channel, TimePoint t,
                          const GeoTransform& domain) {
  SatelliteFrame f;
  f.channel = channel;
  f.timestamp = t;
  f.transform = domain;
  f.mask = Mask(domain.width, domain.height, 1);
  for (auto& v : pixels.values()) v = std::clamp(v, 0.0, 1.0);
  f.pixels = std::move(pixels);
  return f;
}

}  // namespace

RenderedPair render_pair(std::uint64_t texture_seed, const AnalyticField& carrier,
                         Channel channel, TimePoint t0, std::chrono::seconds spacing) {
  const auto& d = carrier.domain;
  const TimePoint t1 = t0 + spacing;
  FlowField truth = sample_field(carrier, t0, t1);
  Grid<double> first = band_limited_texture(texture_seed, d.width, d.height);
  Grid<double> second = warp_periodic(first, truth);
  return {make_frame(std::move(first), channel, t0, d), make_frame(std::move(second), channel, t1, d),
          std::move(truth)};
}

std::vector<FramePair> render_sequence(std::uint64_t seed, const AnalyticField& carrier,
                                       std::size_t count, TimePoint t0,
                                       std::chrono::seconds spacing) {
  const auto& d = carrier.domain;
  const FlowField flow = sample_field(carrier);
  Grid<double> img3 = band_limited_texture(seed * 2 + 1, d.width, d.height);
  Grid<double> img4 = band_limited_texture(seed * 2 + 2, d.width, d.height);
  std::vector<FramePair> out;
  for (std::size_t k = 0; k < count; ++k) {
    const TimePoint t = t0 + spacing * static_cast<long>(k);
    if (k > 0) {
      img3 = warp_periodic(img3, flow);
      img4 = warp_periodic(img4, flow);
    }
    out.push_back({make_frame(img3, Channel::Ch3, t, d), make_frame(img4, Channel::Ch4, t, d)});
  }
  return out;
}

GeoTransform conus_domain(std::size_t width, std::size_t height) {
  return GeoTransform{-124.0, 52.0, 0.04, -0.04, width, height};
}

}  // namespace stormflow::synthetic
