#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "support.hpp"

using namespace stormflow;
using namespace testing_support;

namespace {

FlowField rigid(std::size_t n, double omega) {
  return synthetic::sample_field({{synthetic::RigidRotation{{n / 2.0, n / 2.0}, omega}}, synthetic::conus_domain(n, n)});
}

FlowField shear(std::size_t n, double gamma) {
  return synthetic::sample_field({{synthetic::Shear{gamma, 0.0}}, synthetic::conus_domain(n, n)});
}

ScalarField q_of(const FlowField& f) { return q_criterion(helmholtz_decompose(f).solenoidal); }

ScalarField scalar(std::size_t w, std::size_t h, double fill) {
  return ScalarField{Grid<double>(w, h, fill), Mask(w, h, 1), synthetic::conus_domain(w, h)};
}

double mean_over(const Grid<double>& g, const VortexRegion& r) {
  double s = 0.0;
  for (const auto& p : r.pixels) s += g(p.x, p.y);
  return s / static_cast<double>(r.pixels.size());
}

}  // namespace

TEST(Vorticity, ZeroField) {
  const auto w = vorticity(FlowField::zeros(synthetic::conus_domain(16, 16)));
  EXPECT_EQ(interior_max_abs(w.values, 0), 0.0);
}

TEST(Vorticity, RigidRotationIsTwiceOmega) {
  const auto w = vorticity(rigid(64, 0.1));
  EXPECT_LE(interior_max_abs(w.values, 1, 0.2), 1e-10);
}

TEST(Vorticity, ShearIsMinusGamma) {
  const auto w = vorticity(shear(64, 0.3));
  EXPECT_LE(interior_max_abs(w.values, 1, -0.3), 1e-10);
}

TEST(Vorticity, LinearFieldsExactEverywhere) {
  // One-sided stencils are exact for linear fields too.
  const auto f = field_from(20, 15, [](double x, double y) { return std::pair{0.3 * x - 0.7 * y + 1, 0.2 * x + 0.1 * y}; });
  EXPECT_LE(interior_max_abs(vorticity(f).values, 0, 0.2 + 0.7), 1e-10);
  EXPECT_LE(interior_max_abs(divergence(f).values, 0, 0.3 + 0.1), 1e-10);
}

TEST(Divergence, Cases) {
  EXPECT_EQ(interior_max_abs(divergence(FlowField::zeros(synthetic::conus_domain(8, 8))).values, 0), 0.0);
  const auto radial =
      synthetic::sample_field({{synthetic::Radial{{20.0, 20.0}, 1.0}}, synthetic::conus_domain(40, 40)});
  EXPECT_LE(interior_max_abs(divergence(radial).values, 1, 2.0), 1e-10);
  EXPECT_LE(interior_max_abs(divergence(rigid(40, 0.1)).values, 1), 1e-10);
}

TEST(Helmholtz, RotationHasNoIrrotationalPart) {
  const auto f = rigid(128, 0.1);
  const auto parts = helmholtz_decompose(f);
  double worst = 0.0;
  for (std::size_t y = 1; y + 1 < 128; ++y) {
    for (std::size_t x = 1; x + 1 < 128; ++x) {
      worst = std::max(worst, std::hypot(parts.irrotational.u(x, y), parts.irrotational.v(x, y)));
    }
  }
  EXPECT_LE(worst, 1e-6 * max_abs_flow(f));
}

TEST(Helmholtz, GradientHasNoSolenoidalPart) {
  // Potentials flat near the border carry no boundary flux, so no harmonic
  // remainder enters the solenoidal part.
  const std::size_t n = 96;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(30.0, 66.0), amp(-4.0, 4.0), rad(12.0, 25.0);
  for (int trial = 0; trial < 10; ++trial) {
    struct Bump { double cx, cy, a, r; };
    std::vector<Bump> bumps;
    for (int b = 0; b < 3; ++b) bumps.push_back({pos(rng), pos(rng), amp(rng), rad(rng)});
    const auto phi = [&](double x, double y) {
      double s = 0.0;
      for (const auto& b : bumps) {
        const double q = 1.0 - ((x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy)) / (b.r * b.r);
        if (q > 0.0) s += b.a * q * q * q * q;
      }
      return s;
    };
    const auto f = synthetic::discrete_gradient(phi, synthetic::conus_domain(n, n));
    const auto parts = helmholtz_decompose(f);
    double worst = 0.0;
    for (std::size_t y = 1; y + 1 < n; ++y) {
      for (std::size_t x = 1; x + 1 < n; ++x) {
        worst = std::max(worst, std::hypot(parts.solenoidal.u(x, y), parts.solenoidal.v(x, y)));
      }
    }
    EXPECT_LE(worst, 1e-6 * max_abs_flow(f)) << trial;
  }
}

TEST(Helmholtz, HarmonicGradientStaysSolenoidal) {
  // grad(xy) is both divergence- and curl-free; the mirrored solve assigns it
  // to the solenoidal part, like any other divergence-free field.
  const auto f = field_from(48, 40, [](double x, double y) { return std::pair{0.01 * y, 0.01 * x}; });
  const auto parts = helmholtz_decompose(f);
  EXPECT_LE(interior_max_abs(parts.irrotational.u, 0), 1e-12);
  EXPECT_LE(interior_max_abs(parts.irrotational.v, 0), 1e-12);
}

TEST(Helmholtz, ReconstructionAndCrossTermsOnRandomFields) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto f = synthetic::random_smooth_field(seed, synthetic::conus_domain(80, 64));
    const auto parts = helmholtz_decompose(f);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
      EXPECT_NEAR(parts.solenoidal.u[i] + parts.irrotational.u[i], f.u[i], 1e-12);
      EXPECT_NEAR(parts.solenoidal.v[i] + parts.irrotational.v[i], f.v[i], 1e-12);
    }
    const double scale = max_abs_flow(f);
    EXPECT_LE(interior_max_abs(divergence(parts.solenoidal).values, 2), 1e-6 * scale) << seed;
    EXPECT_LE(interior_max_abs(vorticity(parts.irrotational).values, 2), 1e-6 * scale) << seed;
  }
}

TEST(QCriterion, ClosedForms) {
  EXPECT_LE(interior_max_abs(q_criterion(rigid(64, 0.1)).values, 1, 0.01), 1e-10);
  EXPECT_LE(interior_max_abs(q_criterion(shear(64, 0.3)).values, 1), 1e-10);
  EXPECT_EQ(interior_max_abs(q_criterion(FlowField::zeros(synthetic::conus_domain(9, 9))).values, 0), 0.0);
}

TEST(QCriterion, TensorNormsOfShear) {
  const auto f = shear(16, 0.3);
  const auto g = velocity_gradient(f, 8, 8);
  EXPECT_NEAR(g.rotation_norm2(), 0.3 * 0.3 / 2, 1e-12);
  EXPECT_NEAR(g.strain_norm2(), 0.3 * 0.3 / 2, 1e-12);
}

TEST(QCriterion, DualFormsAgree) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto f = synthetic::random_smooth_field(seed, synthetic::conus_domain(40, 40));
    const auto a = q_criterion(f);
    const auto b = q_criterion_vorticity_form(f);
    const double scale = interior_max_abs(a.values, 0);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      ASSERT_LE(std::abs(a.values[i] - b.values[i]) / scale, 1e-12) << "seed " << seed << " pixel " << i;
    }
  }
}

TEST(ExtractVortices, NonPositiveQGivesNothing) {
  EXPECT_TRUE(extract_vortices(scalar(20, 20, -1.0), 1, {}).empty());
  EXPECT_TRUE(extract_vortices(scalar(20, 20, 0.0), 1, {}).empty());
}

TEST(ExtractVortices, SingleRankine) {
  const std::size_t n = 128;
  const PixelPoint c{64.0, 64.0};
  const auto f = synthetic::sample_field({{synthetic::Rankine{c, 10.0, 0.1}}, synthetic::conus_domain(n, n)});
  const auto q = q_of(f);
  const auto regions = extract_vortices(q, 20, at("2008-06-01T12:30:00Z"));
  ASSERT_EQ(regions.size(), 1u);
  const auto& r = regions[0];
  EXPECT_LE(std::hypot(r.centroid_px.x - c.x, r.centroid_px.y - c.y), 1.0);
  EXPECT_EQ(r.area_px, r.pixels.size());
  EXPECT_EQ(r.timestamp, at("2008-06-01T12:30:00Z"));
  const GeoPoint g = pixel_to_geo(q.transform, r.centroid_px.x, r.centroid_px.y);
  EXPECT_DOUBLE_EQ(r.centroid_geo.lon, g.lon);
  EXPECT_DOUBLE_EQ(r.centroid_geo.lat, g.lat);
  std::set<std::pair<std::uint32_t, std::uint32_t>> members;
  for (const auto& p : r.pixels) members.insert({p.x, p.y});
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      if (std::hypot(x - c.x, y - c.y) < 9.0) EXPECT_TRUE(members.count({x, y})) << x << "," << y;
    }
  }
  for (const auto& p : r.pixels) EXPECT_GT(q.values(p.x, p.y), 0.0);
}

TEST(ExtractVortices, OppositeSpinsSeparate) {
  const std::size_t n = 160;
  const PixelPoint a{50.0, 80.0}, b{110.0, 80.0};
  const auto f = synthetic::sample_field(
      {{synthetic::Rankine{a, 10.0, 0.1}, synthetic::Rankine{b, 10.0, -0.1}}, synthetic::conus_domain(n, n)});
  const auto parts = helmholtz_decompose(f);
  const auto q = q_criterion(parts.solenoidal);
  auto regions = extract_vortices(q, 20, {});
  ASSERT_EQ(regions.size(), 2u);
  std::sort(regions.begin(), regions.end(),
            [](const VortexRegion& l, const VortexRegion& r) { return l.centroid_px.x < r.centroid_px.x; });
  EXPECT_LE(std::hypot(regions[0].centroid_px.x - a.x, regions[0].centroid_px.y - a.y), 1.0);
  EXPECT_LE(std::hypot(regions[1].centroid_px.x - b.x, regions[1].centroid_px.y - b.y), 1.0);
  const auto w = vorticity(parts.solenoidal);
  EXPECT_GT(mean_over(w.values, regions[0]), 0.0);
  EXPECT_LT(mean_over(w.values, regions[1]), 0.0);
}

TEST(ExtractVortices, EightConnectivityAreaFilterAndOrder) {
  auto q = scalar(10, 10, -1.0);
  // Diagonal chain of 3 (one component), a 2x2 block, and an isolated pixel.
  q.values(0, 0) = q.values(1, 1) = q.values(2, 2) = 1.0;
  q.values(6, 6) = q.values(7, 6) = q.values(6, 7) = q.values(7, 7) = 1.0;
  q.values(9, 0) = 1.0;
  const auto all = extract_vortices(q, 1, {});
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].area_px, 4u);
  EXPECT_EQ(all[0].region_id, 6u * 10 + 6);
  EXPECT_EQ(all[1].area_px, 3u);
  EXPECT_EQ(all[1].region_id, 0u);
  EXPECT_EQ(all[2].area_px, 1u);
  EXPECT_EQ(all[2].region_id, 9u);
  EXPECT_EQ(extract_vortices(q, 3, {}).size(), 2u);
  EXPECT_EQ(extract_vortices(q, 5, {}).size(), 0u);
}

TEST(ExtractVortices, MaskedAndSubThresholdPixelsExcluded) {
  auto q = scalar(6, 6, 0.5);
  q.mask(2, 2) = 0;
  auto regions = extract_vortices(q, 1, {});
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_EQ(regions[0].area_px, 35u);
  regions = extract_vortices(q, VortexExtraction{1, 0, 0.5}, {});
  EXPECT_TRUE(regions.empty());
}

TEST(ExtractVortices, DilationGrowsSupport) {
  auto q = scalar(15, 15, -1.0);
  q.values(7, 7) = 1.0;
  const auto plain = extract_vortices(q, VortexExtraction{1, 0, 0.0}, {});
  const auto grown = extract_vortices(q, VortexExtraction{1, 1, 0.0}, {});
  ASSERT_EQ(plain.size(), 1u);
  ASSERT_EQ(grown.size(), 1u);
  EXPECT_EQ(plain[0].area_px, 1u);
  EXPECT_EQ(grown[0].area_px, 9u);
}

TEST(ExtractVortices, IdsDependOnlyOnSupport) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    auto q = scalar(30, 20, 0.0);
    for (auto& v : q.values.values()) v = u(rng);
    // Rescaling positive values keeps the support and must keep ids and pixels.
    auto scaled = q;
    for (auto& v : scaled.values.values()) v = v > 0 ? v * 3.0 + 1.0 : v;
    const auto a = extract_vortices(q, 2, {});
    const auto b = extract_vortices(scaled, 2, {});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].region_id, b[i].region_id);
      EXPECT_EQ(a[i].pixels, b[i].pixels);
      const auto& first = a[i].pixels.front();
      EXPECT_EQ(a[i].region_id, static_cast<std::uint64_t>(first.y) * 30 + first.x);
      EXPECT_TRUE(std::is_sorted(a[i].pixels.begin(), a[i].pixels.end(), [](const PixelIndex& l, const PixelIndex& r) {
        return l.y != r.y ? l.y < r.y : l.x < r.x;
      }));
    }
  }
}

TEST(ScalarIo, SaveLoadRoundTrip) {
  TempDir dir("scalar");
  auto s = scalar(9, 7, 0.0);
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = 0.25 * static_cast<double>(i) - 3.0;
  s.mask(4, 4) = 0;
  s.values(4, 4) = 0.0;
  save_scalar(s, dir.path(), "q");
  const auto back = load_scalar(dir.path(), "q");
  EXPECT_EQ(back.values, s.values);
  EXPECT_EQ(back.mask, s.mask);
  EXPECT_EQ(back.transform, s.transform);
}
