#pragma once

#include <filesystem>

#include "stormflow/geo_imaging.hpp"
#include "stormflow/grid.hpp"
#include "stormflow/timeutil.hpp"

namespace stormflow {

/// Per-pixel displacement (pixels per frame interval) from one frame to the next.
struct FlowField {
  Grid<double> u;
  Grid<double> v;
  Mask mask;
  GeoTransform transform;
  TimePoint t_prev{};
  TimePoint t_next{};

  /// Zero flow, all pixels valid.
  static FlowField zeros(const GeoTransform& t, TimePoint t_prev = {}, TimePoint t_next = {});

  [[nodiscard]] std::size_t width() const noexcept { return u.width(); }
  [[nodiscard]] std::size_t height() const noexcept { return u.height(); }
  [[nodiscard]] bool same_shape(const FlowField& other) const noexcept {
    return u.same_shape(other.u);
  }
  void validate() const;
};

/// Stable-fluids smoothing parameters.
struct SmoothingParams {
  double viscosity = 0.4;
  double dt = 1.0;
  int iterations = 5;
  /// Keep the field as the running mean of the applied force rather than
  /// the accumulated sum, so self-advection backtraces one frame step.
  bool normalize = true;
  /// Drop the curl-free part of each self-advection increment, as the
  /// pressure term of incompressible flow would.
  bool pressure_balance = true;
};

struct FlowParams {
  int pyramid_levels = 3;
  int window_radius = 8;
  /// Threshold on the least eigenvalue of the window-averaged structure
  /// tensor, brightness on [0,1].
  double min_eigen_threshold = 1e-4;
  /// Gauss-Newton refinements per pyramid level.
  int lk_iterations = 8;
  /// Fit an affine motion per window instead of a pure translation. The
  /// reported flow is still the displacement at the window center.
  bool affine = true;
  SmoothingParams smoothing;

  void validate() const;
};

/// Dense coarse-to-fine Lucas-Kanade flow from `prev` to `next`. Pixels whose
/// structure tensor is rank deficient get (0,0) and mask = 0.
FlowField lucas_kanade_dense(const SatelliteFrame& prev, const SatelliteFrame& next,
                             const FlowParams& params);

/// Semi-Lagrangian transport: out(x) = f(x - dt * carrier(x)), bilinear,
/// clamped at the domain edge.
FlowField advect(const FlowField& f, const FlowField& carrier, double dt);

/// Multiplies each component's mirrored-extension spectrum by exp(-nu k^2 dt),
/// k in radians per pixel. Masked pixels are in-filled from the nearest valid
/// pixel before filtering and reset to zero afterwards.
FlowField diffuse_fft(const FlowField& f, double viscosity, double dt);

/// Treats `raw` as an external force and iterates add-force / self-advect /
/// diffuse starting from a zero field.
FlowField stabilize_flow(const FlowField& raw, const FlowParams& params);

/// Writes `<stem>_u.f32`, `<stem>_v.f32` (NaN where masked) and `<stem>.json`.
void save_flow(const FlowField& flow, const std::filesystem::path& dir, const std::string& stem);
FlowField load_flow(const std::filesystem::path& dir, const std::string& stem);

/// Bilinear sample with coordinates clamped to the grid.
double sample_bilinear(const Grid<double>& g, double x, double y);

}  // namespace stormflow
