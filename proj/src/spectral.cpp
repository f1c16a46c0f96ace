#include "bohmflow/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "bohmflow/errors.hpp"

namespace bohmflow {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

FourierTransform::FourierTransform(const Grid& grid) : size_(grid.size()) {
  const auto dims = grid.dims();
  std::vector<int> n(dims.begin(), dims.end());
  std::lock_guard lock(planner_mutex());
  auto* scratch = fftw_alloc_complex(size_);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_ = fftw_plan_dft(static_cast<int>(n.size()), n.data(), scratch, scratch, FFTW_FORWARD, flags);
  backward_ = fftw_plan_dft(static_cast<int>(n.size()), n.data(), scratch, scratch, FFTW_BACKWARD, flags);
  fftw_free(scratch);
  if (!forward_ || !backward_) throw Error(ErrorKind::InvalidArgument, "FFTW planning failed");
}

FourierTransform::~FourierTransform() {
  if (!forward_ && !backward_) return;
  std::lock_guard lock(planner_mutex());
  if (forward_) fftw_destroy_plan(forward_);
  if (backward_) fftw_destroy_plan(backward_);
}

FourierTransform::FourierTransform(FourierTransform&& other) noexcept
    : forward_(other.forward_), backward_(other.backward_), size_(other.size_) {
  other.forward_ = nullptr;
  other.backward_ = nullptr;
}

FourierTransform& FourierTransform::operator=(FourierTransform&& other) noexcept {
  if (this != &other) {
    std::swap(forward_, other.forward_);
    std::swap(backward_, other.backward_);
    std::swap(size_, other.size_);
  }
  return *this;
}

void FourierTransform::forward(std::span<std::complex<double>> data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(forward_, p, p);
}

void FourierTransform::backward(std::span<std::complex<double>> data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(backward_, p, p);
  const double scale = 1.0 / static_cast<double>(size_);
  for (auto& z : data) z *= scale;
}

std::vector<double> wavenumbers(const Axis& axis, bool zero_nyquist) {
  const std::size_t n = axis.n;
  const double dk = 2.0 * std::numbers::pi / axis.period();
  std::vector<double> k(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto m = static_cast<long>(j);
    k[j] = dk * static_cast<double>(j < n / 2 ? m : m - static_cast<long>(n));
  }
  if (zero_nyquist) k[n / 2] = 0.0;
  return k;
}

std::vector<std::complex<double>> derivative(const Grid& grid, std::span<const std::complex<double>> f,
                                             int axis) {
  FourierTransform fft(grid);
  std::vector<std::complex<double>> g(f.begin(), f.end());
  fft.forward(g);
  const std::size_t nx = grid.x().n;
  const std::size_t ny = grid.rank() == 2 ? grid.y().n : 1;
  const auto k = wavenumbers(axis == 0 ? grid.x() : grid.y(), true);
  const std::complex<double> I(0.0, 1.0);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      g[iy * nx + ix] *= I * (axis == 0 ? k[ix] : k[iy]);
    }
  }
  fft.backward(g);
  return g;
}

std::vector<double> derivative(const Grid& grid, std::span<const double> f, int axis) {
  std::vector<std::complex<double>> c(f.begin(), f.end());
  const auto d = derivative(grid, c, axis);
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i].real();
  return out;
}

std::vector<double> laplacian(const Grid& grid, std::span<const double> f) {
  FourierTransform fft(grid);
  std::vector<std::complex<double>> g(f.begin(), f.end());
  fft.forward(g);
  const std::size_t nx = grid.x().n;
  const std::size_t ny = grid.rank() == 2 ? grid.y().n : 1;
  const auto kx = wavenumbers(grid.x(), false);
  const auto ky = grid.rank() == 2 ? wavenumbers(grid.y(), false) : std::vector<double>(1, 0.0);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      g[iy * nx + ix] *= -(kx[ix] * kx[ix] + ky[iy] * ky[iy]);
    }
  }
  fft.backward(g);
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i].real();
  return out;
}

TrigInterpolant::TrigInterpolant(const Axis& axis, std::span<const double> samples)
    : axis_(axis), coeffs_(samples.begin(), samples.end()), k_(wavenumbers(axis, false)) {
  if (samples.size() != axis.n) throw Error(ErrorKind::InvalidArgument, "interpolant sample count mismatch");
  FourierTransform fft(Grid::line(axis));
  fft.forward(coeffs_);
  const double scale = 1.0 / static_cast<double>(axis.n);
  for (auto& c : coeffs_) c *= scale;
}

double TrigInterpolant::operator()(double x) const {
  const double s = x - axis_.min;
  const std::size_t nyq = axis_.n / 2;
  double sum = 0.0;
  for (std::size_t j = 0; j < coeffs_.size(); ++j) {
    if (j == nyq) {
      sum += coeffs_[j].real() * std::cos(k_[j] * s);
      continue;
    }
    const double ph = k_[j] * s;
    sum += coeffs_[j].real() * std::cos(ph) - coeffs_[j].imag() * std::sin(ph);
  }
  return sum;
}

double TrigInterpolant::integral(double a, double b) const {
  const double sa = a - axis_.min;
  const double sb = b - axis_.min;
  const std::size_t nyq = axis_.n / 2;
  double sum = coeffs_[0].real() * (sb - sa);
  for (std::size_t j = 1; j < coeffs_.size(); ++j) {
    const double k = k_[j];
    if (j == nyq) {
      sum += coeffs_[j].real() * (std::sin(k * sb) - std::sin(k * sa)) / k;
      continue;
    }
    // Re[c (e^{ik sb} - e^{ik sa}) / (ik)]
    const double re = (std::sin(k * sb) - std::sin(k * sa)) / k;
    const double im = -(std::cos(k * sb) - std::cos(k * sa)) / k;
    sum += coeffs_[j].real() * re - coeffs_[j].imag() * im;
  }
  return sum;
}

}  // namespace bohmflow
