#include "bohmflow/analytic_packets.hpp"

#include <cmath>
#include <numbers>

#include "bohmflow/errors.hpp"
#include "bohmflow/hydro.hpp"

namespace bohmflow {

namespace {

constexpr double kPi = std::numbers::pi;
const std::complex<double> I(0.0, 1.0);

constexpr double kGridEdgeLimit = 1e-8;

double spread_ratio(const GaussianSpec& s, double t) { return s.hbar * t / (2.0 * s.mass * s.sigma0 * s.sigma0); }

void check_compatible(std::span<const GaussianSpec> specs) {
  if (specs.empty()) throw Error(ErrorKind::InvalidArgument, "superposition needs at least one packet");
  for (const auto& s : specs) {
    s.validate();
    if (s.mass != specs[0].mass || s.hbar != specs[0].hbar) {
      throw Error(ErrorKind::InvalidArgument, "superposed packets must share mass and hbar");
    }
  }
}

WaveField sample_on_grid(std::span<const GaussianSpec> specs, const Grid& grid, double t) {
  if (grid.rank() != 1) throw Error(ErrorKind::InvalidArgument, "Gaussian packets are sampled on 1D grids");
  std::vector<cplx> values(grid.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = grid.x().coord(i);
    for (const auto& s : specs) values[i] += packet_amplitude(s, x, t);
  }
  WaveField field(grid, std::move(values), t, Mode::quantum, Units{specs[0].hbar, specs[0].mass});
  const double edge = edge_amplitude_ratio(field);
  if (edge > kGridEdgeLimit) {
    throw Error(ErrorKind::GridTooNarrow,
                "edge amplitude is " + std::to_string(edge) + " of the peak (limit 1e-8)");
  }
  return field.normalized();
}

}  // namespace

void GaussianSpec::validate() const {
  if (!(sigma0 > 0.0) || !(mass > 0.0) || !(hbar > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "Gaussian packet needs sigma0, mass and hbar > 0");
  }
  if (!std::isfinite(x0) || !std::isfinite(p0) || !std::isfinite(weight.real()) || !std::isfinite(weight.imag())) {
    throw Error(ErrorKind::InvalidArgument, "Gaussian packet parameters must be finite");
  }
}

std::complex<double> GaussianSpec::complex_width(double t) const {
  return sigma0 * (1.0 + I * spread_ratio(*this, t));
}

double sigma_t(const GaussianSpec& spec, double t) {
  const double r = spread_ratio(spec, t);
  return spec.sigma0 * std::sqrt(1.0 + r * r);
}

double sigma_t_rate(const GaussianSpec& spec, double t) {
  const double rate = spec.hbar / (2.0 * spec.mass * spec.sigma0 * spec.sigma0);
  const double r = rate * t;
  return spec.sigma0 * rate * r / std::sqrt(1.0 + r * r);
}

std::complex<double> packet_amplitude(const GaussianSpec& s, double x, double t) {
  const auto width = s.complex_width(t);
  const double u = x - s.classical_position(t);
  const auto prefactor = std::pow(2.0 * kPi * width * width, -0.25);
  const auto exponent = -u * u / (4.0 * width * s.sigma0) + I * (s.p0 * u / s.hbar + s.energy() * t / s.hbar);
  return s.weight * prefactor * std::exp(exponent);
}

std::complex<double> packet_gradient(const GaussianSpec& s, double x, double t) {
  const auto width = s.complex_width(t);
  const double u = x - s.classical_position(t);
  return packet_amplitude(s, x, t) * (-u / (2.0 * width * s.sigma0) + I * s.p0 / s.hbar);
}

PacketPolar packet_polar(const GaussianSpec& s, double x, double t) {
  const double r = spread_ratio(s, t);
  const double st = sigma_t(s, t);
  const double a = 1.0 / (4.0 * st * st);
  const double b = r / (4.0 * st * st);
  const double u = x - s.classical_position(t);
  const double amp = std::abs(s.weight) * std::pow(2.0 * kPi * st * st, -0.25) * std::exp(-a * u * u);
  PacketPolar p;
  p.rho = amp * amp;
  p.action = s.hbar * (b * u * u - 0.5 * std::atan(r) + std::arg(s.weight)) + s.p0 * u + s.energy() * t;
  p.action_grad = 2.0 * s.hbar * b * u + s.p0;
  p.amp_grad = -2.0 * a * u * amp;
  return p;
}

WaveField evaluate_packet(const GaussianSpec& spec, const Grid& grid, double t) {
  spec.validate();
  return sample_on_grid(std::span(&spec, 1), grid, t);
}

WaveField superposition_field(std::span<const GaussianSpec> specs, const Grid& grid, double t) {
  check_compatible(specs);
  return sample_on_grid(specs, grid, t);
}

double analytic_bohmian_trajectory(const GaussianSpec& spec, double x_init, double t) {
  return spec.classical_position(t) + sigma_t(spec, t) / spec.sigma0 * (x_init - spec.x0);
}

double packet_velocity(const GaussianSpec& spec, double x, double t) {
  return spec.velocity() + (x - spec.classical_position(t)) * sigma_t_rate(spec, t) / sigma_t(spec, t);
}

double superposition_peak_bound(std::span<const GaussianSpec> specs, double t) {
  double amp = 0.0;
  for (const auto& s : specs) {
    const double st = sigma_t(s, t);
    amp += std::abs(s.weight) * std::pow(2.0 * kPi * st * st, -0.25);
  }
  return amp * amp;
}

double superposition_velocity(const GaussianSpec& first, const GaussianSpec& second, double x, double t) {
  const GaussianSpec pair[2] = {first, second};
  check_compatible(pair);
  const auto p1 = packet_polar(first, x, t);
  const auto p2 = packet_polar(second, x, t);
  const double phi = (p2.action - p1.action) / first.hbar;
  const double cross = std::sqrt(p1.rho * p2.rho);
  const double rho = p1.rho + p2.rho + 2.0 * cross * std::cos(phi);
  if (!(rho > kNodeFraction * superposition_peak_bound(pair, t))) {
    throw Error(ErrorKind::NodeSingularity, "density vanishes at x = " + std::to_string(x));
  }
  const double r1 = std::sqrt(p1.rho);
  const double r2 = std::sqrt(p2.rho);
  const double drift = p1.rho * p1.action_grad + p2.rho * p2.action_grad +
                       cross * (p1.action_grad + p2.action_grad) * std::cos(phi);
  const double interference = first.hbar * (r1 * p2.amp_grad - r2 * p1.amp_grad) * std::sin(phi);
  return (drift + interference) / (first.mass * rho);
}

double superposition_density(std::span<const GaussianSpec> specs, double x, double t) {
  std::complex<double> psi = 0.0;
  for (const auto& s : specs) psi += packet_amplitude(s, x, t);
  return std::norm(psi);
}

double superposition_velocity(std::span<const GaussianSpec> specs, double x, double t) {
  check_compatible(specs);
  std::complex<double> psi = 0.0;
  std::complex<double> grad = 0.0;
  for (const auto& s : specs) {
    psi += packet_amplitude(s, x, t);
    grad += packet_gradient(s, x, t);
  }
  const double rho = std::norm(psi);
  if (!(rho > kNodeFraction * superposition_peak_bound(specs, t))) {
    throw Error(ErrorKind::NodeSingularity, "density vanishes at x = " + std::to_string(x));
  }
  return specs[0].hbar / specs[0].mass * std::imag(std::conj(psi) * grad) / rho;
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::ehrenfest: return "Ehrenfest/Huygens";
    case Regime::fresnel: return "Fresnel";
    case Regime::fraunhofer: return "Fraunhofer";
  }
  return "unknown";
}

RegimeReport classify_regime(const GaussianSpec& spec, double t) {
  spec.validate();
  if (t < 0.0) throw Error(ErrorKind::InvalidArgument, "regime classification needs t >= 0");
  RegimeReport r;
  r.tau = spec.characteristic_time();
  r.ratio = t / r.tau;
  if (r.ratio < kEhrenfestLimit) {
    r.regime = Regime::ehrenfest;
  } else if (r.ratio < kFraunhoferLimit) {
    r.regime = Regime::fresnel;
  } else {
    r.regime = Regime::fraunhofer;
  }
  return r;
}

DensityMoments density_moments(const WaveField& field) {
  const auto rho = density(field);
  const Axis& ax = field.grid().x();
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    m0 += rho[i];
    m1 += rho[i] * ax.coord(i);
  }
  const double mean = m1 / m0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double d = ax.coord(i) - mean;
    m2 += rho[i] * d * d;
  }
  return {mean, std::sqrt(m2 / m0)};
}

}  // namespace bohmflow
