#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "bohmflow/grid.hpp"

namespace bohmflow {

using cplx = std::complex<double>;

/// Quantum runs evolve in time t; optics runs evolve along the axis z.
enum class Mode : std::uint8_t { quantum = 0, optics = 1 };

/// hbar and mass entering the hydrodynamic relations. Optics mode uses
/// hbar = 1 and mass = k_z (the "optical mass").
struct Units {
  double hbar = 1.0;
  double mass = 1.0;

  bool operator==(const Units&) const = default;
};

/// Complex amplitude sampled on a uniform grid at one value of the
/// evolution parameter. Immutable once built.
class WaveField {
 public:
  /// Throws Error(InvalidArgument) on a size mismatch and Error(NonFinite)
  /// if any sample is NaN or infinite.
  WaveField(Grid grid, std::vector<cplx> values, double param = 0.0, Mode mode = Mode::quantum,
            Units units = {});

  const Grid& grid() const { return grid_; }
  std::span<const cplx> values() const { return values_; }
  double param() const { return param_; }
  Mode mode() const { return mode_; }
  const Units& units() const { return units_; }

  /// Copy rescaled so that norm() == 1. Throws Error(InvalidArgument) for a zero field.
  WaveField normalized() const;
  WaveField with_values(std::vector<cplx> values, double param) const;
  WaveField conjugated() const;

 private:
  Grid grid_;
  std::vector<cplx> values_;
  double param_;
  Mode mode_;
  Units units_;
};

/// Riemann sum of |psi|^2 over the grid (equal to the trapezoid rule on a periodic grid).
double norm(const WaveField& field);

std::vector<double> density(const WaveField& field);

/// Max |psi| over the outermost two points of every edge, relative to max |psi|.
double edge_amplitude_ratio(const WaveField& field);

}  // namespace bohmflow
