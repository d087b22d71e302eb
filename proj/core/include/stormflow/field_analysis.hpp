#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stormflow/geo_imaging.hpp"
#include "stormflow/optical_flow.hpp"

namespace stormflow {

/// Scalar quantity on the flow grid (vorticity, divergence, Q, ...).
struct ScalarField {
  Grid<double> values;
  Mask mask;
  GeoTransform transform;
};

/// Writes `<stem>.f32` (NaN where masked) and a `<stem>.json` sidecar with
/// the transform.
void save_scalar(const ScalarField& s, const std::filesystem::path& dir, const std::string& stem);
ScalarField load_scalar(const std::filesystem::path& dir, const std::string& stem);

/// Velocity gradient at one pixel, laid out as
///   [ dU/dx  dV/dx ]
///   [ dU/dy  dV/dy ]
struct VelocityGradient {
  double du_dx = 0.0;
  double dv_dx = 0.0;
  double du_dy = 0.0;
  double dv_dy = 0.0;

  [[nodiscard]] double vorticity() const { return dv_dx - du_dy; }
  [[nodiscard]] double divergence() const { return du_dx + dv_dy; }
  /// Squared Frobenius norms of the strain (symmetric) and rotation
  /// (antisymmetric) parts.
  [[nodiscard]] double strain_norm2() const;
  [[nodiscard]] double rotation_norm2() const;
};

/// Central differences; one-sided where a neighbor is outside the grid or
/// masked; zero when neither neighbor is usable.
VelocityGradient velocity_gradient(const FlowField& f, std::size_t x, std::size_t y);

ScalarField vorticity(const FlowField& f);
ScalarField divergence(const FlowField& f);

struct HelmholtzParts {
  FlowField solenoidal;
  FlowField irrotational;
};

/// Splits f into a divergence-free part and the gradient of a potential.
/// The potential solves the Poisson equation spectrally on the mirrored
/// extension, using the same central-difference operators as divergence(),
/// so the split is exact for those operators at least two pixels from the
/// border. Divergence-free input, harmonic gradients included, yields a zero
/// irrotational part.
HelmholtzParts helmholtz_decompose(const FlowField& f);

/// Q = 1/2 (|Omega|^2 - |S|^2) from the rotation and strain tensors.
ScalarField q_criterion(const FlowField& solenoidal);
/// Q = 1/4 |omega|^2 - 1/2 |S|^2, algebraically identical to q_criterion().
ScalarField q_criterion_vorticity_form(const FlowField& solenoidal);

struct PixelIndex {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  bool operator==(const PixelIndex&) const = default;
};

struct VortexRegion {
  std::vector<PixelIndex> pixels;  // raster order
  PixelPoint centroid_px;
  GeoPoint centroid_geo;
  std::size_t area_px = 0;
  TimePoint timestamp{};
  /// Raster index (y * width + x) of the first member pixel in raster order.
  std::uint64_t region_id = 0;
};

struct VortexExtraction {
  std::size_t min_area_px = 20;
  /// Optional binary dilation (Chebyshev radius, pixels) of the Q > 0 support
  /// before labeling; 0 disables it.
  int dilation_px = 0;
  /// Support is {Q > q_min}. A strictly positive floor keeps estimation
  /// noise around Q = 0 (pure shear, rounding) from forming regions.
  double q_min = 0.0;
};

/// 8-connected components of {Q > q_min and valid}, largest first (ties by id).
std::vector<VortexRegion> extract_vortices(const ScalarField& q, const VortexExtraction& cfg,
                                           TimePoint t);
inline std::vector<VortexRegion> extract_vortices(const ScalarField& q, std::size_t min_area_px,
                                                  TimePoint t) {
  return extract_vortices(q, VortexExtraction{min_area_px, 0, 0.0}, t);
}

}  // namespace stormflow
