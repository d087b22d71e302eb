#pragma once

#include <functional>
#include <mutex>

#include "stormflow/grid.hpp"

namespace stormflow::spectral {

// Transforms over the even (half-sample mirrored) extension of a grid to twice
// its size in each dimension. The cosine basis of that extension is the 2-D
// DCT-II, so mode (m, n) has angular wavenumbers
//   kx = pi * m / width,  ky = pi * n / height   (radians per pixel).

/// Guards FFTW plan creation and destruction, which are not thread safe.
std::mutex& planner_mutex();

/// Forward DCT-II in both dimensions (unnormalized, FFTW REDFT10 convention).
Grid<double> forward(const Grid<double>& values);
/// Inverse of `forward`, including the 1 / (4 * width * height) normalization.
Grid<double> inverse(const Grid<double>& coefficients);

inline double wavenumber(std::size_t mode, std::size_t extent) {
  return 3.14159265358979323846 * static_cast<double>(mode) / static_cast<double>(extent);
}

using Multiplier = std::function<double(double kx, double ky)>;

/// Multiplies every mirrored-extension Fourier mode by `gain(kx, ky)`.
Grid<double> filter(const Grid<double>& values, const Multiplier& gain);

/// Per-mode energy of the mirrored extension (squared DCT coefficients,
/// weighted so that the sum equals the extension's sum of squares).
Grid<double> mode_energy(const Grid<double>& values);

}  // namespace stormflow::spectral
