#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "bohmflow/grid.hpp"

struct fftw_plan_s;

namespace bohmflow {

/// In-place complex FFT over the grid's dimensions (FFTW backed). The
/// backward transform is normalized so backward(forward(x)) == x.
/// Plan creation is serialized internally; execute is reentrant.
class FourierTransform {
 public:
  explicit FourierTransform(const Grid& grid);
  ~FourierTransform();

  FourierTransform(const FourierTransform&) = delete;
  FourierTransform& operator=(const FourierTransform&) = delete;
  FourierTransform(FourierTransform&& other) noexcept;
  FourierTransform& operator=(FourierTransform&& other) noexcept;

  void forward(std::span<std::complex<double>> data) const;
  void backward(std::span<std::complex<double>> data) const;
  std::size_t size() const { return size_; }

 private:
  fftw_plan_s* forward_ = nullptr;
  fftw_plan_s* backward_ = nullptr;
  std::size_t size_ = 0;
};

/// Angular wavenumbers of an axis in FFT order. `zero_nyquist` zeroes the
/// n/2 mode, which is what odd-order derivatives need.
std::vector<double> wavenumbers(const Axis& axis, bool zero_nyquist);

/// Spectral first derivative along axis 0 (x) or 1 (y).
std::vector<std::complex<double>> derivative(const Grid& grid, std::span<const std::complex<double>> f,
                                             int axis);
std::vector<double> derivative(const Grid& grid, std::span<const double> f, int axis);
std::vector<double> laplacian(const Grid& grid, std::span<const double> f);

/// Trigonometric interpolant of real samples evaluated at an arbitrary x (1D only).
class TrigInterpolant {
 public:
  TrigInterpolant(const Axis& axis, std::span<const double> samples);
  double operator()(double x) const;
  /// Exact integral of the interpolant over [a, b].
  double integral(double a, double b) const;

 private:
  Axis axis_;
  std::vector<std::complex<double>> coeffs_;
  std::vector<double> k_;
};

}  // namespace bohmflow
