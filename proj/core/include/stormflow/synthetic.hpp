#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "stormflow/geo_imaging.hpp"
#include "stormflow/optical_flow.hpp"

namespace stormflow::synthetic {

// Closed-form flows in pixel coordinates (x right, y down). Rotations with
// positive omega have vorticity +2*omega under dV/dx - dU/dy.

struct RigidRotation {
  PixelPoint center;
  double omega = 0.1;
};

/// Solid-body core of radius `core_radius`, 1/r tangential decay outside.
struct Rankine {
  PixelPoint center;
  double core_radius = 10.0;
  double omega = 0.1;
};

/// U = gamma * (y - y0), V = 0.
struct Shear {
  double gamma = 0.3;
  double y0 = 0.0;
};

struct Translation {
  double u = 0.0;
  double v = 0.0;
};

/// U = rate * (x - cx), V = rate * (y - cy).
struct Radial {
  PixelPoint center;
  double rate = 1.0;
};

using Component = std::variant<RigidRotation, Rankine, Shear, Translation, Radial>;

/// Sum of analytic components over a pixel domain.
struct AnalyticField {
  std::vector<Component> components;
  GeoTransform domain;

  [[nodiscard]] std::pair<double, double> velocity(double x, double y) const;
};

/// Exact per-pixel evaluation; all pixels valid.
FlowField sample_field(const AnalyticField& a, TimePoint t_prev = {}, TimePoint t_next = {});

/// Central-difference gradient of a potential evaluated at x +/- 1, y +/- 1
/// (the potential is sampled outside the grid where needed).
FlowField discrete_gradient(const std::function<double(double, double)>& potential,
                            const GeoTransform& domain);

/// Random smooth field: a sum of `modes` sinusoids per component with
/// wavelengths of at least `min_wavelength` pixels and unit-order amplitude.
FlowField random_smooth_field(std::uint64_t seed, const GeoTransform& domain, int modes = 6,
                              double min_wavelength = 24.0);

/// Band-limited periodic noise texture with values in [0.1, 0.9].
Grid<double> band_limited_texture(std::uint64_t seed, std::size_t width, std::size_t height);

/// Image warped backward through the flow with bilinear, periodic sampling:
/// out(x) = image(x - F(x)).
Grid<double> warp_periodic(const Grid<double>& image, const FlowField& flow);

struct RenderedPair {
  SatelliteFrame prev;
  SatelliteFrame next;
  FlowField truth;
};

/// Texture frame and the same frame carried one step by `carrier`.
RenderedPair render_pair(std::uint64_t texture_seed, const AnalyticField& carrier,
                         Channel channel = Channel::Ch4, TimePoint t0 = {},
                         std::chrono::seconds spacing = std::chrono::minutes{30});

/// `count` channel pairs; each frame is the previous one warped by `carrier`.
/// Ch3 and Ch4 use different textures advected by the same motion.
std::vector<FramePair> render_sequence(std::uint64_t seed, const AnalyticField& carrier,
                                       std::size_t count, TimePoint t0,
                                       std::chrono::seconds spacing = std::chrono::minutes{30});

/// Standard synthetic domain: `width` x `height` pixels at 0.04 degrees
/// anchored at 124W, 52N.
GeoTransform conus_domain(std::size_t width, std::size_t height);

}  // namespace stormflow::synthetic
