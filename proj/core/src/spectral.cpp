#include "stormflow/spectral.hpp"

#include <fftw3.h>

#include <memory>
#include <mutex>

namespace stormflow::spectral {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

namespace {

struct FftwFree {
  void operator()(double* p) const noexcept { fftw_free(p); }
};
using Buffer = std::unique_ptr<double[], FftwFree>;

Buffer allocate(std::size_t n) {
  auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  if (!p) throw std::bad_alloc();
  return Buffer(p);
}

Grid<double> run_r2r(const Grid<double>& src, fftw_r2r_kind kind) {
  const std::size_t w = src.width();
  const std::size_t h = src.height();
  Grid<double> out(w, h);
  if (src.empty()) return out;

  auto in = allocate(src.size());
  auto res = allocate(src.size());
  std::copy(src.values().begin(), src.values().end(), in.get());

  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_r2r_2d(static_cast<int>(h), static_cast<int>(w), in.get(), res.get(), kind,
                            kind, FFTW_ESTIMATE);
  }
  if (!plan) throw Error("FFTW failed to create a plan");
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  std::copy(res.get(), res.get() + src.size(), out.values().begin());
  return out;
}

}  // namespace

Grid<double> forward(const Grid<double>& values) { return run_r2r(values, FFTW_REDFT10); }

Grid<double> inverse(const Grid<double>& coefficients) {
  Grid<double> out = run_r2r(coefficients, FFTW_REDFT01);
  const double norm =
      4.0 * static_cast<double>(coefficients.width()) * static_cast<double>(coefficients.height());
  for (auto& v : out.values()) v /= norm;
  return out;
}

Grid<double> filter(const Grid<double>& values, const Multiplier& gain) {
  Grid<double> coeffs = forward(values);
  const std::size_t w = values.width();
  const std::size_t h = values.height();
  for (std::size_t n = 0; n < h; ++n) {
    const double ky = wavenumber(n, h);
    for (std::size_t m = 0; m < w; ++m) coeffs(m, n) *= gain(wavenumber(m, w), ky);
  }
  return inverse(coeffs);
}

Grid<double> mode_energy(const Grid<double>& values) {
  Grid<double> coeffs = forward(values);
  const double w = static_cast<double>(values.width());
  const double h = static_cast<double>(values.height());
  // Orthonormal DCT-II scaling: sqrt(1/N) for the DC row/column, sqrt(2/N)
  // otherwise, after removing FFTW's factor of 2 per dimension.
  for (std::size_t n = 0; n < values.height(); ++n) {
    const double sy = (n == 0 ? 1.0 / h : 2.0 / h) / 4.0;
    for (std::size_t m = 0; m < values.width(); ++m) {
      const double sx = (m == 0 ? 1.0 / w : 2.0 / w) / 4.0;
      const double c = coeffs(m, n);
      // x4 restores the energy of the doubled (mirrored) domain.
      coeffs(m, n) = 4.0 * c * c * sx * sy;
    }
  }
  return coeffs;
}

}  // namespace stormflow::spectral
