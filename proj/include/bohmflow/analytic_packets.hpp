#pragma once

#include <complex>
#include <span>
#include <string_view>
#include <vector>

#include "bohmflow/wave_field.hpp"

namespace bohmflow {

/// One free Gaussian packet (center x0, momentum p0, width sigma0) with a
/// complex superposition weight.
struct GaussianSpec {
  double x0 = 0.0;
  double p0 = 0.0;
  double sigma0 = 1.0;
  double mass = 1.0;
  double hbar = 1.0;
  std::complex<double> weight{1.0, 0.0};

  /// Throws Error(InvalidArgument) unless sigma0, mass and hbar are positive.
  void validate() const;
  double velocity() const { return p0 / mass; }
  /// tau = 2 m sigma0^2 / hbar
  double characteristic_time() const { return 2.0 * mass * sigma0 * sigma0 / hbar; }
  double classical_position(double t) const { return x0 + velocity() * t; }
  /// sigma0 (1 + i hbar t / 2 m sigma0^2)
  std::complex<double> complex_width(double t) const;
  double energy() const { return p0 * p0 / (2.0 * mass); }
};

double sigma_t(const GaussianSpec& spec, double t);
double sigma_t_rate(const GaussianSpec& spec, double t);

/// Closed-form amplitude of the free packet (including its weight) and its x-derivative.
std::complex<double> packet_amplitude(const GaussianSpec& spec, double x, double t);
std::complex<double> packet_gradient(const GaussianSpec& spec, double x, double t);

/// Polar pieces of one weighted packet at (x, t).
struct PacketPolar {
  double rho;
  double action;       // S (including hbar * arg(weight) and the E t term)
  double action_grad;  // dS/dx
  double amp_grad;     // d(rho^1/2)/dx
};
PacketPolar packet_polar(const GaussianSpec& spec, double x, double t);

/// Samples the packet on the grid and normalizes it there. Throws
/// Error(GridTooNarrow) if the edge amplitude exceeds 1e-8 of the peak.
WaveField evaluate_packet(const GaussianSpec& spec, const Grid& grid, double t);

/// Sum of weighted packets, normalized on the grid. All specs must share mass and hbar.
WaveField superposition_field(std::span<const GaussianSpec> specs, const Grid& grid, double t);

/// x(t) = x_cl + (sigma_t / sigma0) (x_init - x0)
double analytic_bohmian_trajectory(const GaussianSpec& spec, double x_init, double t);
/// Guidance velocity of a single free packet at (x, t).
double packet_velocity(const GaussianSpec& spec, double x, double t);

/// Closed-form two-packet velocity assembled from rho_i, S_i and the phase
/// difference; both denominators use the cos term of the interference
/// density. Throws Error(NodeSingularity) where rho <= node threshold.
double superposition_velocity(const GaussianSpec& first, const GaussianSpec& second, double x, double t);

/// Density and velocity of any superposition, (hbar/m) Im(psi* psi') / |psi|^2.
double superposition_density(std::span<const GaussianSpec> specs, double x, double t);
double superposition_velocity(std::span<const GaussianSpec> specs, double x, double t);
/// Upper bound on max_x rho(x, t) used to scale the node threshold.
double superposition_peak_bound(std::span<const GaussianSpec> specs, double t);

enum class Regime { ehrenfest, fresnel, fraunhofer };
std::string_view to_string(Regime regime);

struct RegimeReport {
  double tau;
  double ratio;
  Regime regime;
};

inline constexpr double kEhrenfestLimit = 0.01;
inline constexpr double kFraunhoferLimit = 10.0;

RegimeReport classify_regime(const GaussianSpec& spec, double t);

/// Second-moment width and mean of |psi|^2 (the Gaussian maximum-likelihood fit).
struct DensityMoments {
  double mean;
  double width;
};
DensityMoments density_moments(const WaveField& field);

}  // namespace bohmflow
