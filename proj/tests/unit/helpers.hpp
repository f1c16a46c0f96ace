#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <span>
#include <random>
#include <string>
#include <vector>

#include "bohmflow/wave_field.hpp"

namespace testing {

inline double max_abs_diff(std::span<const std::complex<double>> a, std::span<const std::complex<double>> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bohmflow_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Independent free-particle oracle: the Gaussian's momentum amplitude evolved
/// by exp(-i hbar k^2 t / 2m) and transformed back by direct quadrature.
/// psi(x, 0) is real at x = x0.
inline std::complex<double> momentum_space_packet(double x0, double p0, double sigma0, double mass, double hbar,
                                                  double x, double t) {
  const double k0 = p0 / hbar;
  const double sk = 1.0 / (2.0 * sigma0);  // momentum-space width in k
  const double half = 12.0 * sk;
  const int n = 4001;
  const double dk = 2.0 * half / (n - 1);
  std::complex<double> sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const double k = k0 - half + j * dk;
    const double w = (j == 0 || j == n - 1) ? 0.5 : 1.0;
    const double amp = std::pow(2.0 * std::numbers::pi * sk * sk, -0.25) * std::exp(-(k - k0) * (k - k0) / (4.0 * sk * sk));
    const double phase = k * (x - x0) - hbar * k * k * t / (2.0 * mass);
    sum += w * amp * std::polar(1.0, phase);
  }
  return sum * dk / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace testing
