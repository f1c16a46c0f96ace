#include <doctest.h>

#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "bohmflow/analytic_packets.hpp"
#include "bohmflow/errors.hpp"
#include "bohmflow/field_io.hpp"
#include "bohmflow/hydro.hpp"
#include "bohmflow/spectral.hpp"
#include "helpers.hpp"

using namespace bohmflow;
using testing::max_abs_diff;

namespace {

WaveField plane_wave(const Grid& g, int cycles) {
  const double k = 2.0 * std::numbers::pi * cycles / g.x().period();
  std::vector<cplx> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::polar(1.0, k * g.x().coord(i));
  return WaveField(g, v).normalized();
}

}  // namespace

TEST_CASE("grid construction rejects non-power-of-two and degenerate axes") {
  CHECK_NOTHROW(Grid::line(-1.0, 1.0, 64));
  CHECK_THROWS_AS(Grid::line(-1.0, 1.0, 100), Error);
  CHECK_THROWS_AS(Grid::line(-1.0, 1.0, 4), Error);
  CHECK_THROWS_AS(Grid::line(1.0, 1.0, 64), Error);
  const Grid g = Grid::line(-2.0, 2.0, 16);
  CHECK(g.x().coord(0) == -2.0);
  CHECK(g.x().coord(15) == doctest::Approx(2.0));
  CHECK(g.x().period() == doctest::Approx(16.0 * 4.0 / 15.0));
  const Grid p = Grid::plane({-1, 1, 8}, {0, 2, 16});
  CHECK(p.rank() == 2);
  CHECK(p.size() == 128);
  CHECK(p.dims() == std::vector<std::size_t>{16, 8});
}

TEST_CASE("wave field validates its samples") {
  const Grid g = Grid::line(-5.0, 5.0, 32);
  CHECK_THROWS_AS(WaveField(g, std::vector<cplx>(31)), Error);
  std::vector<cplx> bad(32, 1.0);
  bad[3] = {std::nan(""), 0.0};
  try {
    WaveField(g, bad);
    FAIL("expected NonFinite");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFinite);
  }
  CHECK_THROWS_AS(WaveField(g, std::vector<cplx>(32, 0.0)).normalized(), Error);
  CHECK_THROWS_AS(WaveField(g, std::vector<cplx>(32, 1.0), 0.0, Mode::quantum, Units{0.0, 1.0}), Error);
  const WaveField f = WaveField(g, std::vector<cplx>(32, {0.3, -0.2})).normalized();
  CHECK(norm(f) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("binary snapshots round-trip bit for bit") {
  const Grid g = Grid::line(-20.0, 20.0, 128);
  const GaussianSpec s{.x0 = 1.0, .p0 = 0.7, .sigma0 = 1.3};
  const WaveField f = evaluate_packet(s, g, 0.4);
  std::stringstream buf;
  write_snapshot(buf, f);
  const WaveField back = read_snapshot(buf);
  CHECK(back.grid() == f.grid());
  CHECK(back.param() == f.param());
  CHECK(back.units() == f.units());
  CHECK(std::equal(back.values().begin(), back.values().end(), f.values().begin()));

  std::string bytes = buf.str();
  bytes[0] = 'X';
  std::stringstream bad(bytes);
  CHECK_THROWS_AS(read_snapshot(bad), Error);
}

TEST_CASE("field CSV round-trips with 17 significant digits") {
  const Grid g = Grid::line(-25.0, 25.0, 128);
  const WaveField f = evaluate_packet({.x0 = -1.0, .p0 = 2.0, .sigma0 = 1.5}, g, 0.0);
  std::stringstream buf;
  write_field_csv(buf, f);
  const WaveField back = read_field_csv(buf);
  CHECK(back.grid().x().n == 128);
  CHECK(max_abs_diff(back.values(), f.values()) == 0.0);
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("spectral derivatives are exact for resolved harmonics") {
  const Grid g = Grid::line(0.0, 1.0, 64);
  const double k = 2.0 * std::numbers::pi * 3.0 / g.x().period();
  std::vector<double> f(64), df(64), lap(64);
  for (std::size_t i = 0; i < 64; ++i) {
    const double x = g.x().coord(i);
    f[i] = std::sin(k * x);
    df[i] = k * std::cos(k * x);
    lap[i] = -k * k * std::sin(k * x);
  }
  const auto d = derivative(g, f, 0);
  const auto l = laplacian(g, f);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(d[i] == doctest::Approx(df[i]).epsilon(1e-12).scale(k));
    CHECK(l[i] == doctest::Approx(lap[i]).epsilon(1e-12).scale(k * k));
  }
}

TEST_CASE("trigonometric interpolant reproduces samples and integrates harmonics exactly") {
  const Grid g = Grid::line(-1.0, 1.0, 32);
  const double L = g.x().period();
  const double k = 2.0 * std::numbers::pi * 2.0 / L;
  std::vector<double> f(32);
  for (std::size_t i = 0; i < 32; ++i) f[i] = 1.5 + std::cos(k * g.x().coord(i)) + 0.25 * std::sin(3 * k * g.x().coord(i));
  const TrigInterpolant t(g.x(), f);
  for (std::size_t i = 0; i < 32; ++i) CHECK(t(g.x().coord(i)) == doctest::Approx(f[i]).epsilon(1e-12));
  const double a = -0.37, b = 0.81;
  const double exact = 1.5 * (b - a) + (std::sin(k * b) - std::sin(k * a)) / k -
                       0.25 * (std::cos(3 * k * b) - std::cos(3 * k * a)) / (3 * k);
  CHECK(t.integral(a, b) == doctest::Approx(exact).epsilon(1e-12));
  CHECK(t.integral(g.x().min, g.x().min + L) == doctest::Approx(1.5 * L).epsilon(1e-12));
}

TEST_CASE("plane wave: v = hbar k / m, Q = 0, every point defined") {
  const Grid g = Grid::line(-10.0, 10.0, 128);
  const WaveField f = plane_wave(g, 5);
  const auto h = decompose(f);
  const double k = 2.0 * std::numbers::pi * 5.0 / g.x().period();
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(h.defined[i] == 1);
    CHECK(h.velocity_x[i] == doctest::Approx(k).epsilon(1e-12));
    CHECK(std::abs(h.quantum_potential[i]) < 1e-10);
  }
}

TEST_CASE("Gaussian hydrodynamics match the closed-form polar decomposition") {
  const Grid g = Grid::line(-30.0, 30.0, 512);
  const GaussianSpec s{.x0 = -2.0, .p0 = 1.2, .sigma0 = 1.5, .mass = 2.0, .hbar = 0.8};
  const double t = 3.0;
  const WaveField f = evaluate_packet(s, g, t);
  const auto h = decompose(f);
  const double st = sigma_t(s, t);
  const double xc = s.classical_position(t);
  const std::size_t nx = g.x().n;
  double worst_v = 0.0, worst_q = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    if (!h.defined[i]) continue;
    const double x = g.x().coord(i);
    const double u = x - xc;
    if (std::abs(u) > 6.0 * st) continue;
    // Independent oracle: R = exp(-u^2 / 4 st^2), R''/R = u^2 / 4 st^4 - 1 / 2 st^2.
    const double q = -s.hbar * s.hbar / (2.0 * s.mass) * (u * u / (4 * st * st * st * st) - 1.0 / (2 * st * st));
    worst_q = std::max(worst_q, std::abs(h.quantum_potential[i] - q));
    // v from the numerical gradient of the analytic phase.
    const double e = 1e-5;
    const double ds = std::arg(packet_amplitude(s, x + e, t) / packet_amplitude(s, x - e, t)) * s.hbar / (2 * e);
    worst_v = std::max(worst_v, std::abs(h.velocity_x[i] - ds / s.mass));
  }
  CHECK(worst_v < 1e-7);
  CHECK(worst_q < 1e-8);
}

TEST_CASE("nodes are masked with NaN velocity") {
  const Grid g = Grid::line(-20.0, 20.0, 256);
  // Two counter-propagating packets with equal weight produce exact zeros of psi at the crossing.
  const GaussianSpec specs[2] = {{.x0 = -1.0, .p0 = 4.0, .sigma0 = 2.0}, {.x0 = 1.0, .p0 = -4.0, .sigma0 = 2.0}};
  const WaveField f = superposition_field(specs, g, 0.0);
  const auto h = decompose(f);
  std::size_t masked = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!h.defined[i]) {
      ++masked;
      CHECK(std::isnan(h.velocity_x[i]));
      CHECK(h.rho[i] <= h.node_threshold);
    }
  }
  CHECK(masked > 0);
}

TEST_CASE("phase unwrapping removes 2 pi jumps") {
  std::vector<double> wrapped;
  for (int i = 0; i < 50; ++i) wrapped.push_back(std::remainder(0.4 * i, 2.0 * std::numbers::pi));
  const auto u = unwrap_from(wrapped, 10);
  for (int i = 0; i < 50; ++i) CHECK(u[i] == doctest::Approx(0.4 * (i - 10)).epsilon(1e-12));
}

TEST_CASE("continuity residual between evolved analytic snapshots is small") {
  const Grid g = Grid::line(-30.0, 30.0, 512);
  const GaussianSpec s{.x0 = -3.0, .p0 = 1.0, .sigma0 = 1.0};
  const double dt = 1e-3;
  const WaveField a = evaluate_packet(s, g, 1.0);
  const WaveField b = evaluate_packet(s, g, 1.0 + dt);
  const double r = continuity_residual(a, b);
  CHECK(r < 1e-5 * max_current_divergence(a, b) / dt + 1e-6);
  const Grid other = Grid::line(-30.0, 30.0, 256);
  CHECK_THROWS_AS(continuity_residual(a, evaluate_packet(s, other, 1.0)), Error);
}

TEST_CASE("property: decomposition recovers a random smooth phase") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> coef(-0.5, 0.5);
  const Grid g = Grid::line(-10.0, 10.0, 256);
  for (int trial = 0; trial < 10; ++trial) {
    const double a1 = coef(gen), a2 = coef(gen), c = 1.0 + coef(gen);
    std::vector<cplx> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double x = g.x().coord(i);
      const double phase = a1 * x * x + a2 * std::sin(x);
      v[i] = std::exp(-x * x / (2 * c * c)) * std::polar(1.0, phase);
    }
    const auto h = decompose(WaveField(g, v));
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double x = g.x().coord(i);
      if (std::abs(x) > 3.0 * c) continue;
      CHECK(h.velocity_x[i] == doctest::Approx(2 * a1 * x + a2 * std::cos(x)).epsilon(1e-7).scale(1.0));
    }
  }
}
