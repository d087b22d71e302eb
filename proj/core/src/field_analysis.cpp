#include "stormflow/field_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "stormflow/raster_io.hpp"
#include "stormflow/spectral.hpp"

namespace stormflow {
namespace {

using Matrix2 = std::array<std::array<double, 2>, 2>;

Matrix2 as_matrix(const VelocityGradient& g) {
  return {{{g.du_dx, g.dv_dx}, {g.du_dy, g.dv_dy}}};
}

double frobenius2(const Matrix2& m) {
  double s = 0.0;
  for (const auto& row : m) {
    for (double v : row) s += v * v;
  }
  return s;
}

// Derivative along one axis at index i of a line of n samples, honoring the
// validity of the neighbors.
template <typename At, typename Valid>
double axis_derivative(std::size_t i, std::size_t n, At at, Valid valid) {
  const bool lo = i > 0 && valid(i - 1);
  const bool hi = i + 1 < n && valid(i + 1);
  if (lo && hi) return 0.5 * (at(i + 1) - at(i - 1));
  if (hi) return at(i + 1) - at(i);
  if (lo) return at(i) - at(i - 1);
  return 0.0;
}

double ddx(const Grid<double>& g, const Mask& m, std::size_t x, std::size_t y) {
  return axis_derivative(
      x, g.width(), [&](std::size_t i) { return g(i, y); }, [&](std::size_t i) { return m(i, y) != 0; });
}

double ddy(const Grid<double>& g, const Mask& m, std::size_t x, std::size_t y) {
  return axis_derivative(
      y, g.height(), [&](std::size_t j) { return g(x, j); }, [&](std::size_t j) { return m(x, j) != 0; });
}

ScalarField make_scalar(const FlowField& f) {
  return ScalarField{Grid<double>(f.width(), f.height(), 0.0), f.mask, f.transform};
}

template <typename Fn>
ScalarField per_pixel(const FlowField& f, Fn fn) {
  f.validate();
  ScalarField out = make_scalar(f);
  for (std::size_t y = 0; y < f.height(); ++y) {
    for (std::size_t x = 0; x < f.width(); ++x) {
      if (!f.mask(x, y)) continue;
      out.values(x, y) = fn(velocity_gradient(f, x, y));
    }
  }
  return out;
}

}  // namespace

double VelocityGradient::strain_norm2() const {
  const Matrix2 g = as_matrix(*this);
  Matrix2 s{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) s[i][j] = 0.5 * (g[i][j] + g[j][i]);
  }
  return frobenius2(s);
}

double VelocityGradient::rotation_norm2() const {
  const Matrix2 g = as_matrix(*this);
  Matrix2 r{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) r[i][j] = 0.5 * (g[i][j] - g[j][i]);
  }
  return frobenius2(r);
}

VelocityGradient velocity_gradient(const FlowField& f, std::size_t x, std::size_t y) {
  return {ddx(f.u, f.mask, x, y), ddx(f.v, f.mask, x, y), ddy(f.u, f.mask, x, y),
          ddy(f.v, f.mask, x, y)};
}

ScalarField vorticity(const FlowField& f) {
  return per_pixel(f, [](const VelocityGradient& g) { return g.vorticity(); });
}

ScalarField divergence(const FlowField& f) {
  return per_pixel(f, [](const VelocityGradient& g) { return g.divergence(); });
}

ScalarField q_criterion(const FlowField& solenoidal) {
  return per_pixel(solenoidal, [](const VelocityGradient& g) {
    return 0.5 * (g.rotation_norm2() - g.strain_norm2());
  });
}

ScalarField q_criterion_vorticity_form(const FlowField& solenoidal) {
  return per_pixel(solenoidal, [](const VelocityGradient& g) {
    const double w = g.vorticity();
    return 0.25 * w * w - 0.5 * g.strain_norm2();
  });
}

HelmholtzParts helmholtz_decompose(const FlowField& f) {
  f.validate();
  const std::size_t w = f.width();
  const std::size_t h = f.height();
  const ScalarField div = divergence(f);

  // Solve (Dx Dx + Dy Dy) phi = div, where D is the central difference. In the
  // cosine basis of the mirrored extension D D has symbol -(sin^2 kx + sin^2 ky).
  Grid<double> coeffs = spectral::forward(div.values);
  const double mean_div = coeffs(0, 0) / (4.0 * static_cast<double>(w * h));
  for (std::size_t n = 0; n < h; ++n) {
    const double sy = std::sin(spectral::wavenumber(n, h));
    for (std::size_t m = 0; m < w; ++m) {
      const double sx = std::sin(spectral::wavenumber(m, w));
      const double symbol = -(sx * sx + sy * sy);
      coeffs(m, n) = (m == 0 && n == 0) || symbol == 0.0 ? 0.0 : coeffs(m, n) / symbol;
    }
  }
  Grid<double> phi = spectral::inverse(coeffs);

  // The mean divergence has no periodic potential; a centered paraboloid has
  // (Dx Dx + Dy Dy) = mean_div exactly.
  const double cx = 0.5 * static_cast<double>(w - 1);
  const double cy = 0.5 * static_cast<double>(h - 1);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      phi(x, y) += 0.25 * mean_div * (dx * dx + dy * dy);
    }
  }

  const Mask all(w, h, 1);
  HelmholtzParts parts{f, f};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double gx = ddx(phi, all, x, y);
      const double gy = ddy(phi, all, x, y);
      if (f.mask(x, y)) {
        parts.irrotational.u(x, y) = gx;
        parts.irrotational.v(x, y) = gy;
        parts.solenoidal.u(x, y) = f.u(x, y) - gx;
        parts.solenoidal.v(x, y) = f.v(x, y) - gy;
      } else {
        parts.irrotational.u(x, y) = parts.irrotational.v(x, y) = 0.0;
        parts.solenoidal.u(x, y) = parts.solenoidal.v(x, y) = 0.0;
      }
    }
  }
  return parts;
}

std::vector<VortexRegion> extract_vortices(const ScalarField& q, const VortexExtraction& cfg,
                                           TimePoint t) {
  const std::size_t w = q.values.width();
  const std::size_t h = q.values.height();
  if (!q.mask.same_shape(q.values)) throw DataError("extract_vortices: mask shape mismatch");

  Mask support(w, h, 0);
  for (std::size_t i = 0; i < support.size(); ++i) {
    support[i] = (q.mask[i] && q.values[i] > cfg.q_min) ? 1 : 0;
  }
  if (cfg.dilation_px > 0) {
    const long r = cfg.dilation_px;
    Mask grown = support;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        if (!support(x, y)) continue;
        for (long dy = -r; dy <= r; ++dy) {
          for (long dx = -r; dx <= r; ++dx) {
            const long nx = static_cast<long>(x) + dx;
            const long ny = static_cast<long>(y) + dy;
            if (nx < 0 || ny < 0 || nx >= static_cast<long>(w) || ny >= static_cast<long>(h)) continue;
            if (q.mask(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny))) {
              grown(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)) = 1;
            }
          }
        }
      }
    }
    support = std::move(grown);
  }

  std::vector<VortexRegion> regions;
  Mask visited(w, h, 0);
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < support.size(); ++start) {
    if (!support[start] || visited[start]) continue;
    VortexRegion region;
    region.region_id = start;
    region.timestamp = t;
    visited[start] = 1;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      const long x = static_cast<long>(i % w);
      const long y = static_cast<long>(i / w);
      region.pixels.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)});
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          const long nx = x + dx;
          const long ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= static_cast<long>(w) || ny >= static_cast<long>(h)) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
          if (support[j] && !visited[j]) {
            visited[j] = 1;
            queue.push_back(j);
          }
        }
      }
    }
    if (region.pixels.size() < cfg.min_area_px) continue;
    std::sort(region.pixels.begin(), region.pixels.end(),
              [](const PixelIndex& a, const PixelIndex& b) {
                return a.y != b.y ? a.y < b.y : a.x < b.x;
              });
    double sx = 0.0, sy = 0.0;
    for (const auto& p : region.pixels) {
      sx += p.x;
      sy += p.y;
    }
    region.area_px = region.pixels.size();
    region.centroid_px = {sx / static_cast<double>(region.area_px),
                          sy / static_cast<double>(region.area_px)};
    region.centroid_geo = pixel_to_geo(q.transform, region.centroid_px.x, region.centroid_px.y);
    regions.push_back(std::move(region));
  }
  std::sort(regions.begin(), regions.end(), [](const VortexRegion& a, const VortexRegion& b) {
    return a.area_px != b.area_px ? a.area_px > b.area_px : a.region_id < b.region_id;
  });
  return regions;
}

void save_scalar(const ScalarField& s, const std::filesystem::path& dir, const std::string& stem) {
  if (!s.values.same_shape(s.transform.width, s.transform.height) || !s.mask.same_shape(s.values)) {
    throw ConfigError("scalar field shape does not match its transform");
  }
  std::filesystem::create_directories(dir);
  Grid<double> v = s.values;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!s.mask[i]) v[i] = std::numeric_limits<double>::quiet_NaN();
  }
  io::write_f32(dir / (stem + ".f32"), v);
  nlohmann::json j;
  j["kind"] = "scalar";
  j["lon_origin"] = s.transform.lon_origin;
  j["lat_origin"] = s.transform.lat_origin;
  j["dlon"] = s.transform.dlon;
  j["dlat"] = s.transform.dlat;
  j["width"] = s.transform.width;
  j["height"] = s.transform.height;
  std::ofstream out(dir / (stem + ".json"), std::ios::trunc);
  if (!out) throw Error("cannot write scalar sidecar in '" + dir.string() + "'");
  out << j.dump(2) << '\n';
}

ScalarField load_scalar(const std::filesystem::path& dir, const std::string& stem) {
  std::ifstream in(dir / (stem + ".json"));
  if (!in) throw DataError("missing scalar sidecar '" + (dir / (stem + ".json")).string() + "'");
  ScalarField s;
  try {
    const auto j = nlohmann::json::parse(in);
    s.transform.lon_origin = j.at("lon_origin").get<double>();
    s.transform.lat_origin = j.at("lat_origin").get<double>();
    s.transform.dlon = j.at("dlon").get<double>();
    s.transform.dlat = j.at("dlat").get<double>();
    s.transform.width = j.at("width").get<std::size_t>();
    s.transform.height = j.at("height").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed scalar sidecar: ") + e.what());
  }
  s.values = io::read_f32(dir / (stem + ".f32"), s.transform.width, s.transform.height);
  s.mask = Mask(s.transform.width, s.transform.height, 1);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (std::isnan(s.values[i])) {
      s.mask[i] = 0;
      s.values[i] = 0.0;
    }
  }
  return s;
}

}  // namespace stormflow
