#include "bohmflow/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bohmflow/errors.hpp"
#include "bohmflow/spectral.hpp"

namespace bohmflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double wrap_angle(double d) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return d - two_pi * std::round(d / two_pi);
}

std::vector<double> divergence(const Grid& grid, const std::vector<std::vector<double>>& j) {
  auto div = derivative(grid, j[0], 0);
  if (grid.rank() == 2) {
    const auto dy = derivative(grid, j[1], 1);
    for (std::size_t i = 0; i < div.size(); ++i) div[i] += dy[i];
  }
  return div;
}

struct MaskedContinuity {
  double residual = 0.0;
  double max_div = 0.0;
};

MaskedContinuity continuity_terms(const WaveField& a, const WaveField& b) {
  if (!(a.grid() == b.grid())) throw Error(ErrorKind::GridMismatch, "snapshots live on different grids");
  if (!(a.units() == b.units())) throw Error(ErrorKind::GridMismatch, "snapshots use different units");
  const auto rho_a = density(a);
  const auto rho_b = density(b);
  const auto div_a = divergence(a.grid(), probability_current(a));
  const auto div_b = divergence(b.grid(), probability_current(b));
  const double dparam = b.param() - a.param();

  double rho_max = 0.0;
  for (std::size_t i = 0; i < rho_a.size(); ++i) rho_max = std::max(rho_max, 0.5 * (rho_a[i] + rho_b[i]));
  const double threshold = kNodeFraction * rho_max;

  MaskedContinuity out;
  for (std::size_t i = 0; i < rho_a.size(); ++i) {
    if (0.5 * (rho_a[i] + rho_b[i]) <= threshold) continue;
    const double div_mid = 0.5 * (div_a[i] + div_b[i]);
    const double drho = dparam != 0.0 ? (rho_b[i] - rho_a[i]) / dparam : 0.0;
    out.residual = std::max(out.residual, std::abs(drho + div_mid));
    out.max_div = std::max(out.max_div, std::abs(div_mid));
  }
  return out;
}

}  // namespace

std::vector<double> unwrap_from(std::span<const double> wrapped, std::size_t anchor) {
  std::vector<double> out(wrapped.size(), 0.0);
  if (wrapped.empty()) return out;
  out[anchor] = 0.0;
  for (std::size_t i = anchor + 1; i < wrapped.size(); ++i) {
    out[i] = out[i - 1] + wrap_angle(wrapped[i] - wrapped[i - 1]);
  }
  for (std::size_t i = anchor; i-- > 0;) {
    out[i] = out[i + 1] + wrap_angle(wrapped[i] - wrapped[i + 1]);
  }
  return out;
}

std::vector<std::vector<double>> probability_current(const WaveField& field) {
  const Grid& grid = field.grid();
  const double scale = field.units().hbar / field.units().mass;
  const auto psi = field.values();
  std::vector<std::vector<double>> j;
  for (int axis = 0; axis < grid.rank(); ++axis) {
    const auto d = derivative(grid, psi, axis);
    std::vector<double> comp(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) comp[i] = scale * std::imag(std::conj(psi[i]) * d[i]);
    j.push_back(std::move(comp));
  }
  return j;
}

HydroFields decompose(const WaveField& field) {
  const Grid& grid = field.grid();
  const auto psi = field.values();
  const std::size_t n = psi.size();
  const double hbar = field.units().hbar;
  const double mass = field.units().mass;

  HydroFields h;
  h.rho = density(field);
  const auto peak = std::max_element(h.rho.begin(), h.rho.end());
  const std::size_t anchor = static_cast<std::size_t>(peak - h.rho.begin());
  h.node_threshold = kNodeFraction * *peak;
  h.defined.resize(n);
  for (std::size_t i = 0; i < n; ++i) h.defined[i] = h.rho[i] > h.node_threshold ? 1 : 0;

  auto j = probability_current(field);
  h.current_x = std::move(j[0]);
  if (grid.rank() == 2) h.current_y = std::move(j[1]);

  h.velocity_x.assign(n, kNaN);
  if (grid.rank() == 2) h.velocity_y.assign(n, kNaN);
  for (std::size_t i = 0; i < n; ++i) {
    if (!h.defined[i]) continue;
    h.velocity_x[i] = h.current_x[i] / h.rho[i];
    if (grid.rank() == 2) h.velocity_y[i] = h.current_y[i] / h.rho[i];
  }

  // Phase: unwrap along x through the anchor row, then along y in every column.
  std::vector<double> wrapped(n);
  for (std::size_t i = 0; i < n; ++i) wrapped[i] = std::arg(psi[i]);
  const std::size_t nx = grid.x().n;
  const std::size_t ny = grid.rank() == 2 ? grid.y().n : 1;
  const std::size_t ax = anchor % nx;
  const std::size_t ay = anchor / nx;
  h.action.assign(n, 0.0);
  std::vector<double> row(wrapped.begin() + ay * nx, wrapped.begin() + (ay + 1) * nx);
  const auto row_unwrapped = unwrap_from(row, ax);
  std::vector<double> column(ny);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) column[iy] = wrapped[iy * nx + ix];
    const auto col = unwrap_from(column, ay);
    for (std::size_t iy = 0; iy < ny; ++iy) h.action[iy * nx + ix] = hbar * (row_unwrapped[ix] + col[iy]);
  }

  std::vector<double> amplitude(n);
  for (std::size_t i = 0; i < n; ++i) amplitude[i] = std::sqrt(h.rho[i]);
  const auto lap = laplacian(grid, amplitude);
  h.quantum_potential.assign(n, kNaN);
  const double pref = -hbar * hbar / (2.0 * mass);
  for (std::size_t i = 0; i < n; ++i) {
    if (!h.defined[i]) continue;
    h.quantum_potential[i] = pref * lap[i] / amplitude[i];
    const bool finite = std::isfinite(h.quantum_potential[i]) && std::isfinite(h.velocity_x[i]) &&
                        (grid.rank() == 1 || std::isfinite(h.velocity_y[i]));
    if (!finite) throw Error(ErrorKind::NonFinite, "non-finite derivative at an unmasked point");
  }
  return h;
}

double continuity_residual(const WaveField& a, const WaveField& b) { return continuity_terms(a, b).residual; }

double max_current_divergence(const WaveField& a, const WaveField& b) { return continuity_terms(a, b).max_div; }

}  // namespace bohmflow
