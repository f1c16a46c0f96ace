#include <doctest.h>

#include <numbers>
#include <random>

#include "bohmflow/analytic_packets.hpp"
#include "bohmflow/errors.hpp"
#include "helpers.hpp"

using namespace bohmflow;

TEST_CASE("width at one characteristic time is sigma0 sqrt 2") {
  for (double m : {0.5, 1.0, 3.0}) {
    const GaussianSpec s{.sigma0 = 1.7, .mass = m, .hbar = 0.9};
    const double tau = s.characteristic_time();
    CHECK(tau == doctest::Approx(2.0 * m * 1.7 * 1.7 / 0.9));
    CHECK(sigma_t(s, tau) == doctest::Approx(1.7 * std::numbers::sqrt2).epsilon(1e-15));
    CHECK(sigma_t(s, 0.0) == 1.7);
  }
}

TEST_CASE("closed-form amplitude matches a direct momentum-space quadrature") {
  const GaussianSpec s{.x0 = -1.0, .p0 = 1.5, .sigma0 = 0.8, .mass = 1.3, .hbar = 1.0};
  for (double t : {0.0, 0.7, 3.0}) {
    for (double x : {-4.0, -1.0, 0.3, 2.5, 5.0}) {
      const auto a = packet_amplitude(s, x, t);
      const auto b = testing::momentum_space_packet(s.x0, s.p0, s.sigma0, s.mass, s.hbar, x, t);
      CHECK(std::abs(a - b) < 1e-10);
    }
  }
}

TEST_CASE("packet gradient agrees with a finite difference of the amplitude") {
  const GaussianSpec s{.x0 = 0.5, .p0 = -2.0, .sigma0 = 1.1, .weight = {0.6, 0.8}};
  const double h = 1e-5;
  for (double x : {-2.0, 0.0, 1.3}) {
    const auto fd = (packet_amplitude(s, x + h, 1.2) - packet_amplitude(s, x - h, 1.2)) / (2 * h);
    CHECK(std::abs(packet_gradient(s, x, 1.2) - fd) < 1e-8);
  }
}

TEST_CASE("guidance velocity is grad S / m of the analytic phase") {
  const GaussianSpec s{.x0 = 2.0, .p0 = 0.7, .sigma0 = 1.2, .mass = 0.7, .hbar = 1.1};
  const double e = 1e-5;
  for (double t : {0.1, 2.0, 9.0}) {
    for (double x : {-3.0, 1.0, 4.0}) {
      const double ds = std::arg(packet_amplitude(s, x + e, t) / packet_amplitude(s, x - e, t)) * s.hbar / (2 * e);
      CHECK(packet_velocity(s, x, t) == doctest::Approx(ds / s.mass).epsilon(1e-8));
    }
  }
}

TEST_CASE("analytic trajectory solves dx/dt = v") {
  const GaussianSpec s{.x0 = -3.0, .p0 = 1.0, .sigma0 = 0.9};
  const double h = 1e-5;
  for (double xi : {-5.0, -3.0, -1.2}) {
    for (double t : {0.3, 4.0}) {
      const double dx = (analytic_bohmian_trajectory(s, xi, t + h) - analytic_bohmian_trajectory(s, xi, t - h)) / (2 * h);
      CHECK(dx == doctest::Approx(packet_velocity(s, analytic_bohmian_trajectory(s, xi, t), t)).epsilon(1e-8));
    }
    CHECK(analytic_bohmian_trajectory(s, xi, 0.0) == xi);
  }
}

TEST_CASE("two-packet formula agrees with the general superposition velocity") {
  const GaussianSpec a{.x0 = -10.0, .p0 = 2.0, .sigma0 = 1.0, .weight = {1.0, 0.0}};
  const GaussianSpec b{.x0 = 10.0, .p0 = -2.0, .sigma0 = 1.0, .weight = {0.0, 0.8}};
  const GaussianSpec both[2] = {a, b};
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> xs(-6.0, 6.0), ts(3.0, 7.0);
  int compared = 0;
  for (int i = 0; i < 200; ++i) {
    const double x = xs(gen), t = ts(gen);
    if (superposition_density(both, x, t) < 1e-6) continue;
    CHECK(superposition_velocity(a, b, x, t) == doctest::Approx(superposition_velocity(both, x, t)).epsilon(1e-9));
    ++compared;
  }
  CHECK(compared > 100);
}

TEST_CASE("two-packet velocity refuses exact nodes") {
  const GaussianSpec a{.x0 = -5.0, .p0 = 0.0, .sigma0 = 1.0};
  const GaussianSpec b{.x0 = 5.0, .p0 = 0.0, .sigma0 = 1.0, .weight = {-1.0, 0.0}};
  try {
    (void)superposition_velocity(a, b, 0.0, 0.0);
    FAIL("expected NodeSingularity");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NodeSingularity);
  }
}

TEST_CASE("regime classification follows t / tau") {
  const GaussianSpec s{.sigma0 = 1.0};
  CHECK(classify_regime(s, 0.001).regime == Regime::ehrenfest);
  CHECK(classify_regime(s, 2.0).regime == Regime::fresnel);
  CHECK(classify_regime(s, 100.0).regime == Regime::fraunhofer);
  CHECK(classify_regime(s, 2.0).ratio == doctest::Approx(1.0));
  CHECK(to_string(Regime::fresnel) == "Fresnel");
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS((GaussianSpec{.sigma0 = 0.0}).validate(), Error);
  CHECK_THROWS_AS((GaussianSpec{.mass = -1.0}).validate(), Error);
  CHECK_THROWS_AS((GaussianSpec{.hbar = 0.0}).validate(), Error);
  const Grid narrow = Grid::line(-2.0, 2.0, 64);
  try {
    (void)evaluate_packet(GaussianSpec{.sigma0 = 1.0}, narrow, 0.0);
    FAIL("expected GridTooNarrow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GridTooNarrow);
  }
  const GaussianSpec mixed[2] = {{.x0 = -5.0}, {.x0 = 5.0, .mass = 2.0}};
  CHECK_THROWS_AS(superposition_field(mixed, Grid::line(-30, 30, 256), 0.0), Error);
}

TEST_CASE("density moments recover centre and width of a sampled packet") {
  const Grid g = Grid::line(-120.0, 120.0, 4096);
  const GaussianSpec s{.x0 = 3.0, .p0 = 0.5, .sigma0 = 1.4};
  for (double t : {0.0, 5.0, 20.0}) {
    const auto m = density_moments(evaluate_packet(s, g, t));
    CHECK(m.mean == doctest::Approx(s.classical_position(t)).epsilon(1e-10));
    CHECK(m.width == doctest::Approx(sigma_t(s, t)).epsilon(1e-10));
  }
}

TEST_CASE("property: free density stays normalized and symmetric about the classical path") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int i = 0; i < 20; ++i) {
    const GaussianSpec s{.x0 = u(gen), .p0 = u(gen) - 1.0, .sigma0 = u(gen), .mass = u(gen)};
    const double t = 3.0 * u(gen);
    const double xc = s.classical_position(t);
    for (double d : {0.3, 1.1, 2.6}) {
      CHECK(std::norm(packet_amplitude(s, xc + d, t)) == doctest::Approx(std::norm(packet_amplitude(s, xc - d, t))).epsilon(1e-12));
    }
    // Integral of rho by Gauss-Hermite-free trapezoid over +-10 sigma.
    const double st = sigma_t(s, t);
    double sum = 0.0;
    const int n = 4000;
    const double h = 20.0 * st / n;
    for (int j = 0; j <= n; ++j) sum += (j == 0 || j == n ? 0.5 : 1.0) * std::norm(packet_amplitude(s, xc - 10 * st + j * h, t));
    CHECK(sum * h == doctest::Approx(1.0).epsilon(1e-10));
  }
}
