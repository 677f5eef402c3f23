#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbmlab/extinction.hpp"

using namespace sbmlab;

namespace {

BranchingMechanism quadratic(double alpha, double beta) {
  BranchingMechanism m;
  m.alpha = alpha;
  m.beta = beta;
  return m;
}

// Hand-integrated oracle for alpha = beta = 1: k' = -(k + k^2), k(0+) = inf.
double k_closed(double t) { return 1.0 / std::expm1(t); }

}  // namespace

TEST_CASE("quadratic extinction curve against the separable closed form") {
  const auto m = quadratic(1.0, 1.0);
  const auto c = solve_lambda_star(m);
  const auto curve = solve_k(m, c, 1e-3, 10.0, 1e-10);
  CHECK(curve.value(1.0) == doctest::Approx(k_closed(1.0)).epsilon(1e-8));
  double worst = 0.0;
  for (double t = 0.1; t <= 10.0; t += 0.01) {
    const double rel = std::abs(curve.value(t) - k_closed(t)) / k_closed(t);
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("k decreasing and e^{qt} k(t) nonincreasing at nodes") {
  const auto m = quadratic(1.5, 0.7);
  const auto c = solve_lambda_star(m);
  const auto curve = solve_k(m, c, 1e-3, 8.0, 1e-10);
  for (std::size_t i = 0; i + 1 < curve.t_nodes.size(); ++i) {
    CHECK(curve.k_values[i + 1] < curve.k_values[i]);
    const double a = std::exp(c.q * curve.t_nodes[i]) * curve.k_values[i];
    const double b = std::exp(c.q * curve.t_nodes[i + 1]) * curve.k_values[i + 1];
    CHECK(b <= a * (1.0 + 1e-12));
  }
  // e^{qt} k(t) tends to a positive constant
  const double tail = std::exp(c.q * 8.0) * curve.value(8.0);
  CHECK(tail > 0.0);
  CHECK(tail < std::exp(c.q * 4.0) * curve.value(4.0) * (1.0 + 1e-9));
}

TEST_CASE("comparison bound with fitted c2; exact for the unit quadratic") {
  const auto m = quadratic(1.0, 1.0);
  const auto c = solve_lambda_star(m);
  const auto curve = solve_k(m, c, 1e-3, 10.0, 1e-10);
  const auto rep = check_k_bounds(curve, H2Witness{1.0, 1.0, 1.0});
  CHECK(rep.c2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.ok);
  CHECK(rep.min_margin >= -1e-9);
  // psi(1 + l) = l + l^2, so the bound reproduces k itself
  CHECK(std::abs(std::pow(std::expm1(rep.c2 * 1.0), -1.0) - k_closed(1.0)) < 1e-8);
}

TEST_CASE("stable mechanism curve respects its own comparison bound") {
  BranchingMechanism m;
  m.alpha = 1.0;
  m.beta = 0.0;
  m.levy = LevyStable{0.5, 1.0};
  const auto c = solve_lambda_star(m);
  const auto curve = solve_k(m, c, 1e-3, 6.0, 1e-9);
  const auto rep = check_k_bounds(curve, H2Witness{0.5, 1.0, 1.0});
  CHECK(rep.ok);
  for (std::size_t i = 0; i + 1 < curve.t_nodes.size(); ++i)
    CHECK(curve.k_values[i + 1] < curve.k_values[i]);
}

TEST_CASE("integrability probe stays finite and mesh-stable") {
  const auto m = quadratic(1.0, 1.0);
  const auto c = solve_lambda_star(m);
  const auto curve = solve_k(m, c, 1e-4, 4.0, 1e-10);
  for (double eps : {0.25, 0.5}) {
    const double coarse = phi_k_integral(curve, 2.0, eps, 40, 8);
    const double fine = phi_k_integral(curve, 2.0, eps, 41, 16);
    CHECK(std::isfinite(coarse));
    CHECK(coarse > 0.0);
    CHECK(std::abs(fine - coarse) / coarse < 1e-3);
  }
}

TEST_CASE("initializer guard") {
  const auto m = quadratic(1.0, 1.0);
  const auto c = solve_lambda_star(m);
  CHECK_THROWS_AS(solve_k(m, c, 1e-14, 1.0, 1e-9), NumericalError);
}
