#pragma once

#include <cstdint>
#include <vector>

#include "bohmflow/wave_field.hpp"

namespace bohmflow {

/// Relative node threshold: velocity is undefined where rho <= kNodeFraction * max(rho).
inline constexpr double kNodeFraction = 1e-10;

/// Polar/hydrodynamic view of a WaveField. Masked points (rho below the node
/// threshold) carry NaN in velocity and quantum_potential and 0 in `defined`.
/// The y components are empty for 1D fields.
struct HydroFields {
  std::vector<double> rho;
  std::vector<double> action;  // S, unwrapped, gauge-fixed to 0 at the density maximum
  std::vector<double> current_x;
  std::vector<double> current_y;
  std::vector<double> velocity_x;
  std::vector<double> velocity_y;
  std::vector<double> quantum_potential;
  std::vector<std::uint8_t> defined;
  double node_threshold = 0.0;
};

HydroFields decompose(const WaveField& field);

/// Spectral probability current (hbar/m) Im(psi* grad psi); {jx, jy}.
std::vector<std::vector<double>> probability_current(const WaveField& field);

/// Max-norm of (rho_b - rho_a)/dparam + div J_mid over points where the
/// averaged density exceeds the node threshold. Equal params drop the time term.
double continuity_residual(const WaveField& a, const WaveField& b);

/// Max |div J| over the same mask as continuity_residual (for scaling).
double max_current_divergence(const WaveField& a, const WaveField& b);

/// Unwrap phase angles (radians) along one line of samples starting from `anchor`, gauge 0 there.
std::vector<double> unwrap_from(std::span<const double> wrapped, std::size_t anchor);

}  // namespace bohmflow
