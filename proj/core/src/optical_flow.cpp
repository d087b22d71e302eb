#include "stormflow/optical_flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "stormflow/field_analysis.hpp"
#include "stormflow/raster_io.hpp"
#include "stormflow/spectral.hpp"

namespace stormflow {

FlowField FlowField::zeros(const GeoTransform& t, TimePoint t_prev, TimePoint t_next) {
  FlowField f;
  f.u = Grid<double>(t.width, t.height, 0.0);
  f.v = Grid<double>(t.width, t.height, 0.0);
  f.mask = Mask(t.width, t.height, 1);
  f.transform = t;
  f.t_prev = t_prev;
  f.t_next = t_next;
  return f;
}

void FlowField::validate() const {
  if (!u.same_shape(transform.width, transform.height) || !v.same_shape(u) ||
      !mask.same_shape(u)) {
    throw DataError("flow field grids do not match the transform");
  }
}

void FlowParams::validate() const {
  if (pyramid_levels < 1) throw ConfigError("pyramid_levels must be >= 1");
  if (window_radius < 1) throw ConfigError("window_radius must be >= 1");
  if (lk_iterations < 1) throw ConfigError("lk_iterations must be >= 1");
  if (!(min_eigen_threshold >= 0.0)) throw ConfigError("min_eigen_threshold must be >= 0");
  if (smoothing.iterations < 0) throw ConfigError("smoothing iterations must be >= 0");
  if (!(smoothing.viscosity >= 0.0)) throw ConfigError("viscosity must be >= 0");
  if (!(smoothing.dt > 0.0)) throw ConfigError("smoothing dt must be > 0");
}

double sample_bilinear(const Grid<double>& g, double x, double y) {
  const double maxx = static_cast<double>(g.width() - 1);
  const double maxy = static_cast<double>(g.height() - 1);
  x = std::clamp(x, 0.0, maxx);
  y = std::clamp(y, 0.0, maxy);
  const auto x0 = static_cast<std::size_t>(x);
  const auto y0 = static_cast<std::size_t>(y);
  const std::size_t x1 = std::min(x0 + 1, g.width() - 1);
  const std::size_t y1 = std::min(y0 + 1, g.height() - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  if (fx == 0.0 && fy == 0.0) return g(x0, y0);
  return (1.0 - fy) * ((1.0 - fx) * g(x0, y0) + fx * g(x1, y0)) +
         fy * ((1.0 - fx) * g(x0, y1) + fx * g(x1, y1));
}

namespace {

struct PyramidLevel {
  Grid<double> image;
  Grid<double> weight;  // 1 valid, 0 invalid
};

Grid<double> mask_to_weight(const Mask& m) {
  Grid<double> w(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) w[i] = m[i] ? 1.0 : 0.0;
  return w;
}

// Mask-normalized 5-tap binomial blur followed by 2x decimation.
PyramidLevel downsample(const PyramidLevel& in) {
  static constexpr double kTaps[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const std::size_t w = in.image.width();
  const std::size_t h = in.image.height();
  const std::size_t ow = (w + 1) / 2;
  const std::size_t oh = (h + 1) / 2;

  // Horizontal pass at decimated columns.
  Grid<double> num_h(ow, h), den_h(ow, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      double num = 0.0, den = 0.0;
      for (int k = -2; k <= 2; ++k) {
        const auto sx = std::clamp<long>(static_cast<long>(2 * ox) + k, 0, static_cast<long>(w) - 1);
        const double wt = kTaps[k + 2] * in.weight(static_cast<std::size_t>(sx), y);
        num += wt * in.image(static_cast<std::size_t>(sx), y);
        den += wt;
      }
      num_h(ox, y) = num;
      den_h(ox, y) = den;
    }
  }
  PyramidLevel out{Grid<double>(ow, oh), Grid<double>(ow, oh)};
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      double num = 0.0, den = 0.0;
      for (int k = -2; k <= 2; ++k) {
        const auto sy = std::clamp<long>(static_cast<long>(2 * oy) + k, 0, static_cast<long>(h) - 1);
        num += kTaps[k + 2] * num_h(ox, static_cast<std::size_t>(sy));
        den += kTaps[k + 2] * den_h(ox, static_cast<std::size_t>(sy));
      }
      const bool valid = den > 0.5;
      out.image(ox, oy) = den > 0.0 ? num / den : 0.0;
      out.weight(ox, oy) = valid ? 1.0 : 0.0;
    }
  }
  return out;
}

// Separable triangular window of half-width r+1. Its spectrum is a squared
// sinc, never negative, which keeps the dense fixed-point update contractive.
Grid<double> window_sum(const Grid<double>& g, int r) {
  const long w = static_cast<long>(g.width());
  const long h = static_cast<long>(g.height());
  std::vector<double> taps(static_cast<std::size_t>(2 * r + 1));
  for (int d = -r; d <= r; ++d) taps[static_cast<std::size_t>(d + r)] = r + 1 - std::abs(d);
  Grid<double> horiz(g.width(), g.height());
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      double s = 0.0;
      for (long d = std::max(-static_cast<long>(r), -x); d <= std::min<long>(r, w - 1 - x); ++d) {
        s += taps[static_cast<std::size_t>(d + r)] * g(static_cast<std::size_t>(x + d), static_cast<std::size_t>(y));
      }
      horiz(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = s;
    }
  }
  Grid<double> out(g.width(), g.height());
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      double s = 0.0;
      for (long d = std::max(-static_cast<long>(r), -y); d <= std::min<long>(r, h - 1 - y); ++d) {
        s += taps[static_cast<std::size_t>(d + r)] * horiz(static_cast<std::size_t>(x), static_cast<std::size_t>(y + d));
      }
      out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = s;
    }
  }
  return out;
}

void gradients(const Grid<double>& img, Grid<double>& gx, Grid<double>& gy) {
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  gx = Grid<double>(w, h);
  gy = Grid<double>(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (w > 1) {
        if (x == 0) gx(x, y) = img(1, y) - img(0, y);
        else if (x == w - 1) gx(x, y) = img(x, y) - img(x - 1, y);
        else gx(x, y) = 0.5 * (img(x + 1, y) - img(x - 1, y));
      }
      if (h > 1) {
        if (y == 0) gy(x, y) = img(x, 1) - img(x, 0);
        else if (y == h - 1) gy(x, y) = img(x, y) - img(x, y - 1);
        else gy(x, y) = 0.5 * (img(x, y + 1) - img(x, y - 1));
      }
    }
  }
}

// Catmull-Rom weights for samples at offsets -1, 0, 1, 2.
void cubic_weights(double t, double* wt) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  wt[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  wt[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  wt[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  wt[3] = 0.5 * (t3 - t2);
}

double least_eigenvalue(double a, double b, double c) {
  const double half_trace = 0.5 * (a + c);
  const double d = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return half_trace - d;
}

using Matrix6 = std::array<std::array<double, 6>, 6>;

// Cholesky factor of a symmetric positive definite system of size n <= 6.
struct Factor6 {
  Matrix6 l{};
  int n = 0;

  bool init(const Matrix6& m, int size) {
    n = size;
    const double scale = m[0][0] + m[1][1];
    if (!(scale > 0.0)) return false;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        double sum = m[i][j];
        for (int k = 0; k < j; ++k) sum -= l[i][k] * l[j][k];
        if (i == j) {
          if (!(sum > 1e-12 * scale)) return false;
          l[i][i] = std::sqrt(sum);
        } else {
          l[i][j] = sum / l[j][j];
        }
      }
    }
    return true;
  }

  void solve(double* b) const {
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < i; ++k) b[i] -= l[i][k] * b[k];
      b[i] /= l[i][i];
    }
    for (int i = n - 1; i >= 0; --i) {
      for (int k = i + 1; k < n; ++k) b[i] -= l[k][i] * b[k];
      b[i] /= l[i][i];
    }
  }
};

// One pyramid level of iterative dense Lucas-Kanade. Returns the per-pixel
// least eigenvalue of the window-averaged structure tensor.
Grid<double> refine_level(const PyramidLevel& prev, const PyramidLevel& next, Grid<double>& u,
                          Grid<double>& v, const FlowParams& p) {
  const std::size_t w = prev.image.width();
  const std::size_t h = prev.image.height();
  Grid<double> ix, iy;
  gradients(prev.image, ix, iy);

  Grid<double> wxx(w, h), wxy(w, h), wyy(w, h);
  for (std::size_t i = 0; i < ix.size(); ++i) {
    const double wt = prev.weight[i];
    wxx[i] = wt * ix[i] * ix[i];
    wxy[i] = wt * ix[i] * iy[i];
    wyy[i] = wt * iy[i] * iy[i];
  }
  const auto gxx = window_sum(wxx, p.window_radius);
  const auto gxy = window_sum(wxy, p.window_radius);
  const auto gyy = window_sum(wyy, p.window_radius);
  const auto count = window_sum(prev.weight, p.window_radius);

  Grid<double> min_eig(w, h, 0.0);
  for (std::size_t i = 0; i < min_eig.size(); ++i) {
    const double n = count[i];
    if (n > 0.0) min_eig[i] = least_eigenvalue(gxx[i] / n, gxy[i] / n, gyy[i] / n);
  }

  // Each pixel refines its own motion model with the whole window warped by
  // it, so the Gauss-Newton steps of neighboring pixels stay independent.
  // The affine model adds a 2x2 displacement gradient about the center pixel.
  const long r = p.window_radius;
  const long lw = static_cast<long>(w);
  const long lh = static_cast<long>(h);
  const double max_step = static_cast<double>(p.window_radius);
  auto at = [&](const Grid<double>& g, long x, long y) {
    return g(static_cast<std::size_t>(std::clamp(x, 0L, lw - 1)),
             static_cast<std::size_t>(std::clamp(y, 0L, lh - 1)));
  };
  auto basis = [&](std::size_t j, double ox, double oy, double* phi, int n) {
    phi[0] = ix[j];
    phi[1] = iy[j];
    if (n == 6) {
      phi[2] = ix[j] * ox;
      phi[3] = ix[j] * oy;
      phi[4] = iy[j] * ox;
      phi[5] = iy[j] * oy;
    }
  };
  for (long y = 0; y < lh; ++y) {
    for (long x = 0; x < lw; ++x) {
      const auto i = static_cast<std::size_t>(y * lw + x);
      if (!(min_eig[i] >= p.min_eigen_threshold) || min_eig[i] <= 0.0) continue;
      const long x0 = std::max(0L, x - r), x1 = std::min(lw - 1, x + r);
      const long y0 = std::max(0L, y - r), y1 = std::min(lh - 1, y + r);
      // One-sided windows at the frame edge cannot pin down a gradient.
      const bool full = x - r >= 0 && y - r >= 0 && x + r < lw && y + r < lh;
      const int n = p.affine && full ? 6 : 2;
      auto kernel = [&](long qx, long qy) {
        return static_cast<double>((r + 1 - std::abs(qx - x)) * (r + 1 - std::abs(qy - y)));
      };

      Matrix6 hess{};
      double phi[6];
      for (long qy = y0; qy <= y1; ++qy) {
        for (long qx = x0; qx <= x1; ++qx) {
          const auto j = static_cast<std::size_t>(qy * lw + qx);
          if (prev.weight[j] == 0.0) continue;
          basis(j, static_cast<double>(qx - x), static_cast<double>(qy - y), phi, n);
          const double k = kernel(qx, qy);
          for (int a = 0; a < n; ++a) {
            for (int c = a; c < n; ++c) hess[a][c] += k * phi[a] * phi[c];
          }
        }
      }
      for (int a = 0; a < n; ++a) {
        for (int c = 0; c < a; ++c) hess[a][c] = hess[c][a];
      }
      Factor6 factor;
      if (!factor.init(hess, n)) continue;

      double model[6] = {u[i], v[i], 0.0, 0.0, 0.0, 0.0};
      for (int it = 0; it < p.lk_iterations; ++it) {
        double rhs[6] = {};
        for (long qy = y0; qy <= y1; ++qy) {
          for (long qx = x0; qx <= x1; ++qx) {
            const auto j = static_cast<std::size_t>(qy * lw + qx);
            if (prev.weight[j] == 0.0) continue;
            const double ox = static_cast<double>(qx - x);
            const double oy = static_cast<double>(qy - y);
            const double sx = static_cast<double>(qx) + model[0] + model[2] * ox + model[3] * oy;
            const double sy = static_cast<double>(qy) + model[1] + model[4] * ox + model[5] * oy;
            if (sx < 0.0 || sy < 0.0 || sx > static_cast<double>(lw - 1) ||
                sy > static_cast<double>(lh - 1)) {
              continue;
            }
            const double fx = std::floor(sx);
            const double fy = std::floor(sy);
            const auto bx = static_cast<long>(fx);
            const auto by = static_cast<long>(fy);
            const double ax = sx - fx;
            const double ay = sy - fy;
            if (at(next.weight, bx + (ax >= 0.5), by + (ay >= 0.5)) == 0.0) continue;
            double cxw[4], cyw[4];
            cubic_weights(ax, cxw);
            cubic_weights(ay, cyw);
            double warped = 0.0;
            for (int b = 0; b < 4; ++b) {
              double row = 0.0;
              for (int a = 0; a < 4; ++a) row += cxw[a] * at(next.image, bx - 1 + a, by - 1 + b);
              warped += cyw[b] * row;
            }
            const double e = kernel(qx, qy) * (prev.image[j] - warped);
            basis(j, ox, oy, phi, n);
            for (int a = 0; a < n; ++a) rhs[a] += phi[a] * e;
          }
        }
        factor.solve(rhs);
        rhs[0] = std::clamp(rhs[0], -max_step, max_step);
        rhs[1] = std::clamp(rhs[1], -max_step, max_step);
        for (int a = 0; a < n; ++a) model[a] += rhs[a];
        for (int a = 2; a < n; ++a) model[a] = std::clamp(model[a], -0.5, 0.5);
        if (rhs[0] * rhs[0] + rhs[1] * rhs[1] < 1e-6) break;
      }
      // A window that wandered further than its own radius has lost track.
      if (std::hypot(model[0] - u[i], model[1] - v[i]) <= max_step) {
        u[i] = model[0];
        v[i] = model[1];
      }
    }
  }
  return min_eig;
}

Grid<double> upsample_flow(const Grid<double>& coarse, std::size_t w, std::size_t h) {
  Grid<double> out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      out(x, y) = 2.0 * sample_bilinear(coarse, 0.5 * static_cast<double>(x),
                                        0.5 * static_cast<double>(y));
    }
  }
  return out;
}

}  // namespace

FlowField lucas_kanade_dense(const SatelliteFrame& prev, const SatelliteFrame& next,
                             const FlowParams& params) {
  params.validate();
  if (prev.channel != next.channel) throw DataError("lucas_kanade_dense: channel mismatch");
  if (!(prev.transform == next.transform)) throw DataError("lucas_kanade_dense: transform mismatch");
  prev.validate();
  next.validate();
  const std::size_t w = prev.transform.width;
  const std::size_t h = prev.transform.height;
  const std::size_t min_extent = (std::size_t{1} << (params.pyramid_levels - 1)) *
                                 static_cast<std::size_t>(2 * params.window_radius + 1);
  if (w < min_extent || h < min_extent) {
    throw DataError("frames are too small for the requested pyramid depth and window");
  }

  std::vector<PyramidLevel> pyr_prev{{prev.pixels, mask_to_weight(prev.mask)}};
  std::vector<PyramidLevel> pyr_next{{next.pixels, mask_to_weight(next.mask)}};
  for (int l = 1; l < params.pyramid_levels; ++l) {
    pyr_prev.push_back(downsample(pyr_prev.back()));
    pyr_next.push_back(downsample(pyr_next.back()));
  }

  Grid<double> u, v, min_eig;
  for (int l = params.pyramid_levels - 1; l >= 0; --l) {
    const auto& lp = pyr_prev[static_cast<std::size_t>(l)];
    const auto& ln = pyr_next[static_cast<std::size_t>(l)];
    const std::size_t lw = lp.image.width();
    const std::size_t lh = lp.image.height();
    if (u.empty()) {
      u = Grid<double>(lw, lh, 0.0);
      v = Grid<double>(lw, lh, 0.0);
    } else {
      u = upsample_flow(u, lw, lh);
      v = upsample_flow(v, lw, lh);
    }
    min_eig = refine_level(lp, ln, u, v, params);
  }

  FlowField out;
  out.transform = prev.transform;
  out.t_prev = prev.timestamp;
  out.t_next = next.timestamp;
  out.u = std::move(u);
  out.v = std::move(v);
  out.mask = Mask(w, h, 0);
  for (std::size_t i = 0; i < out.mask.size(); ++i) {
    const bool ok = prev.mask[i] && min_eig[i] >= params.min_eigen_threshold && min_eig[i] > 0.0;
    out.mask[i] = ok ? 1 : 0;
    if (!ok) {
      out.u[i] = 0.0;
      out.v[i] = 0.0;
    }
  }
  return out;
}

FlowField advect(const FlowField& f, const FlowField& carrier, double dt) {
  if (!f.same_shape(carrier)) throw DataError("advect: dimension mismatch");
  FlowField out = f;
  if (dt == 0.0) return out;
  const std::size_t w = f.width();
  const std::size_t h = f.height();
  const double maxx = static_cast<double>(w - 1);
  const double maxy = static_cast<double>(h - 1);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double bx = std::clamp(static_cast<double>(x) - dt * carrier.u(x, y), 0.0, maxx);
      const double by = std::clamp(static_cast<double>(y) - dt * carrier.v(x, y), 0.0, maxy);
      const auto x0 = static_cast<std::size_t>(bx);
      const auto y0 = static_cast<std::size_t>(by);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const std::size_t y1 = std::min(y0 + 1, h - 1);
      const double fx = bx - static_cast<double>(x0);
      const double fy = by - static_cast<double>(y0);
      const std::size_t xs[4] = {x0, x1, x0, x1};
      const std::size_t ys[4] = {y0, y0, y1, y1};
      const double ws[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      // Only valid samples contribute; weights are renormalized.
      double su = 0.0, sv = 0.0, sw = 0.0;
      for (int k = 0; k < 4; ++k) {
        if (ws[k] == 0.0 || !f.mask(xs[k], ys[k])) continue;
        su += ws[k] * f.u(xs[k], ys[k]);
        sv += ws[k] * f.v(xs[k], ys[k]);
        sw += ws[k];
      }
      if (sw > 0.0) {
        out.u(x, y) = su / sw;
        out.v(x, y) = sv / sw;
      }
    }
  }
  return out;
}

namespace {

// Copies each valid value to its nearest invalid neighbors, breadth first.
Grid<double> nearest_fill(const Grid<double>& values, const Mask& mask) {
  Grid<double> out = values;
  const std::size_t w = values.width();
  const std::size_t h = values.height();
  Mask seen = mask;
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) queue.push_back(i);
  }
  if (queue.empty()) return out;
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const long x = static_cast<long>(i % w);
    const long y = static_cast<long>(i / w);
    for (long dy = -1; dy <= 1; ++dy) {
      for (long dx = -1; dx <= 1; ++dx) {
        const long nx = x + dx;
        const long ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= static_cast<long>(w) || ny >= static_cast<long>(h)) continue;
        const std::size_t j = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
        if (seen[j]) continue;
        seen[j] = 1;
        out[j] = out[i];
        queue.push_back(j);
      }
    }
  }
  return out;
}

}  // namespace

FlowField diffuse_fft(const FlowField& f, double viscosity, double dt) {
  f.validate();
  if (viscosity == 0.0 || dt == 0.0) return f;
  const bool all_valid = std::all_of(f.mask.values().begin(), f.mask.values().end(),
                                     [](unsigned char m) { return m != 0; });
  const bool none_valid = std::none_of(f.mask.values().begin(), f.mask.values().end(),
                                       [](unsigned char m) { return m != 0; });
  if (none_valid) return f;

  const auto gain = [viscosity, dt](double kx, double ky) {
    return std::exp(-viscosity * (kx * kx + ky * ky) * dt);
  };
  FlowField out = f;
  out.u = spectral::filter(all_valid ? f.u : nearest_fill(f.u, f.mask), gain);
  out.v = spectral::filter(all_valid ? f.v : nearest_fill(f.v, f.mask), gain);
  if (!all_valid) {
    for (std::size_t i = 0; i < out.mask.size(); ++i) {
      if (!out.mask[i]) {
        out.u[i] = 0.0;
        out.v[i] = 0.0;
      }
    }
  }
  return out;
}

FlowField stabilize_flow(const FlowField& raw, const FlowParams& params) {
  params.validate();
  raw.validate();
  const auto& s = params.smoothing;
  FlowField field = raw;
  field.u.fill(0.0);
  field.v.fill(0.0);
  for (int it = 0; it < s.iterations; ++it) {
    // Running-mean mode keeps the field in force units: after k rounds of a
    // constant force it equals that force instead of k * dt times it.
    const double keep = s.normalize ? static_cast<double>(it) / (it + 1) : 1.0;
    const double add = s.normalize ? 1.0 / (it + 1) : s.dt;
    for (std::size_t i = 0; i < field.u.size(); ++i) {
      if (!raw.mask[i]) continue;
      field.u[i] = keep * field.u[i] + add * raw.u[i];
      field.v[i] = keep * field.v[i] + add * raw.v[i];
    }
    FlowField moved = advect(field, field, s.dt);
    if (s.pressure_balance) {
      // Only the rotational part of the advective change is kept; its
      // gradient part is what a pressure field would cancel.
      FlowField change = moved;
      for (std::size_t i = 0; i < change.u.size(); ++i) {
        change.u[i] -= field.u[i];
        change.v[i] -= field.v[i];
      }
      const FlowField kept = helmholtz_decompose(change).solenoidal;
      for (std::size_t i = 0; i < moved.u.size(); ++i) {
        if (!moved.mask[i]) continue;
        moved.u[i] = field.u[i] + kept.u[i];
        moved.v[i] = field.v[i] + kept.v[i];
      }
    }
    field = std::move(moved);
    field = diffuse_fft(field, s.viscosity, s.dt);
  }
  return field;
}

void save_flow(const FlowField& flow, const std::filesystem::path& dir, const std::string& stem) {
  flow.validate();
  std::filesystem::create_directories(dir);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Grid<double> u = flow.u, v = flow.v;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!flow.mask[i]) u[i] = v[i] = nan;
  }
  io::write_f32(dir / (stem + "_u.f32"), u);
  io::write_f32(dir / (stem + "_v.f32"), v);
  nlohmann::json j;
  j["kind"] = "flow";
  j["t_prev"] = format_utc(flow.t_prev);
  j["t_next"] = format_utc(flow.t_next);
  j["lon_origin"] = flow.transform.lon_origin;
  j["lat_origin"] = flow.transform.lat_origin;
  j["dlon"] = flow.transform.dlon;
  j["dlat"] = flow.transform.dlat;
  j["width"] = flow.transform.width;
  j["height"] = flow.transform.height;
  std::ofstream out(dir / (stem + ".json"), std::ios::trunc);
  if (!out) throw Error("cannot write flow sidecar in '" + dir.string() + "'");
  out << j.dump(2) << '\n';
}

FlowField load_flow(const std::filesystem::path& dir, const std::string& stem) {
  std::ifstream in(dir / (stem + ".json"));
  if (!in) throw DataError("missing flow sidecar '" + (dir / (stem + ".json")).string() + "'");
  nlohmann::json j;
  FlowField f;
  try {
    j = nlohmann::json::parse(in);
    f.t_prev = parse_utc(j.at("t_prev").get<std::string>());
    f.t_next = parse_utc(j.at("t_next").get<std::string>());
    f.transform.lon_origin = j.at("lon_origin").get<double>();
    f.transform.lat_origin = j.at("lat_origin").get<double>();
    f.transform.dlon = j.at("dlon").get<double>();
    f.transform.dlat = j.at("dlat").get<double>();
    f.transform.width = j.at("width").get<std::size_t>();
    f.transform.height = j.at("height").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed flow sidecar: ") + e.what());
  }
  f.u = io::read_f32(dir / (stem + "_u.f32"), f.transform.width, f.transform.height);
  f.v = io::read_f32(dir / (stem + "_v.f32"), f.transform.width, f.transform.height);
  f.mask = Mask(f.transform.width, f.transform.height, 1);
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    if (std::isnan(f.u[i]) || std::isnan(f.v[i])) {
      f.mask[i] = 0;
      f.u[i] = f.v[i] = 0.0;
    }
  }
  return f;
}

}  // namespace stormflow
