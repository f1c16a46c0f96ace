#include "bohmflow/grid.hpp"

#include <cmath>
#include <string>

#include "bohmflow/errors.hpp"
#include "bohmflow/wave_field.hpp"

namespace bohmflow {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::GridTooNarrow: return "GridTooNarrow";
    case ErrorKind::BoundaryContamination: return "BoundaryContamination";
    case ErrorKind::UnstableStep: return "UnstableStep";
    case ErrorKind::StartAtNode: return "StartAtNode";
    case ErrorKind::NodeSingularity: return "NodeSingularity";
    case ErrorKind::NodeAtTarget: return "NodeAtTarget";
    case ErrorKind::BisectionDisagreement: return "BisectionDisagreement";
    case ErrorKind::ParaxialViolation: return "ParaxialViolation";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

void check_axis(const Axis& a, const char* name) {
  if (a.n < 8 || !is_power_of_two(a.n)) {
    throw Error(ErrorKind::InvalidArgument, std::string(name) + ".n must be a power of two >= 8, got " +
                                                std::to_string(a.n));
  }
  if (!std::isfinite(a.min) || !std::isfinite(a.max) || !(a.max > a.min)) {
    throw Error(ErrorKind::InvalidArgument, std::string(name) + " bounds must be finite with max > min");
  }
}

}  // namespace

Grid Grid::line(double x_min, double x_max, std::size_t n) {
  Axis x{x_min, x_max, n};
  check_axis(x, "x");
  return Grid(x, std::nullopt);
}

Grid Grid::plane(const Axis& x, const Axis& y) {
  check_axis(x, "x");
  check_axis(y, "y");
  return Grid(x, y);
}

const Axis& Grid::y() const {
  if (!y_) throw Error(ErrorKind::InvalidArgument, "1D grid has no y axis");
  return *y_;
}

double Grid::cell_volume() const { return x_.spacing() * (y_ ? y_->spacing() : 1.0); }

std::vector<std::size_t> Grid::dims() const {
  if (y_) return {y_->n, x_.n};
  return {x_.n};
}

std::vector<double> Grid::x_coords() const {
  std::vector<double> xs(x_.n);
  for (std::size_t i = 0; i < x_.n; ++i) xs[i] = x_.coord(i);
  return xs;
}

WaveField::WaveField(Grid grid, std::vector<cplx> values, double param, Mode mode, Units units)
    : grid_(std::move(grid)), values_(std::move(values)), param_(param), mode_(mode), units_(units) {
  if (values_.size() != grid_.size()) {
    throw Error(ErrorKind::InvalidArgument, "field has " + std::to_string(values_.size()) +
                                                " samples for a grid of " + std::to_string(grid_.size()));
  }
  for (const auto& v : values_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw Error(ErrorKind::NonFinite, "wave field contains NaN or Inf");
    }
  }
  if (!(units_.hbar > 0.0) || !(units_.mass > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "hbar and mass must be positive");
  }
}

WaveField WaveField::normalized() const {
  const double n = norm(*this);
  if (!(n > 0.0)) throw Error(ErrorKind::InvalidArgument, "cannot normalize a zero field");
  const double scale = 1.0 / std::sqrt(n);
  std::vector<cplx> v(values_);
  for (auto& z : v) z *= scale;
  return WaveField(grid_, std::move(v), param_, mode_, units_);
}

WaveField WaveField::with_values(std::vector<cplx> values, double param) const {
  return WaveField(grid_, std::move(values), param, mode_, units_);
}

WaveField WaveField::conjugated() const {
  std::vector<cplx> v(values_);
  for (auto& z : v) z = std::conj(z);
  return WaveField(grid_, std::move(v), param_, mode_, units_);
}

double norm(const WaveField& field) {
  double sum = 0.0;
  for (const auto& z : field.values()) sum += std::norm(z);
  return sum * field.grid().cell_volume();
}

std::vector<double> density(const WaveField& field) {
  std::vector<double> rho(field.values().size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::norm(field.values()[i]);
  return rho;
}

double edge_amplitude_ratio(const WaveField& field) {
  const auto v = field.values();
  double peak = 0.0;
  for (const auto& z : v) peak = std::max(peak, std::abs(z));
  if (peak == 0.0) return 0.0;
  const std::size_t nx = field.grid().x().n;
  const std::size_t ny = field.grid().rank() == 2 ? field.grid().y().n : 1;
  double edge = 0.0;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const bool on_x_edge = ix < 2 || ix + 2 >= nx;
      const bool on_y_edge = ny > 1 && (iy < 2 || iy + 2 >= ny);
      if (on_x_edge || on_y_edge) edge = std::max(edge, std::abs(v[iy * nx + ix]));
    }
  }
  return edge / peak;
}

}  // namespace bohmflow
