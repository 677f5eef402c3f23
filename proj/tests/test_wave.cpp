#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbmlab/fkpp.hpp"
#include "sbmlab/wave.hpp"

using namespace sbmlab;

namespace {

BranchingMechanism quadratic(double alpha, double beta) {
  BranchingMechanism m;
  m.alpha = alpha;
  m.beta = beta;
  return m;
}

// Linearization oracle for the left decay rate: the positive root of
// (1/2) mu^2 + sqrt(2 alpha) mu - q = 0 by the quadratic formula.
double left_rate_oracle(double alpha, double q) {
  const double s = std::sqrt(2.0 * alpha);
  return -s + std::sqrt(s * s + 2.0 * q);
}

}  // namespace

TEST_CASE("traveling wave: residual, limits, normalization, decay") {
  const auto m = quadratic(1.0, 1.0);
  const auto c = solve_lambda_star(m);
  WaveOptions opts;
  const auto w = traveling_wave(m, c, opts);

  CHECK(w.residual_max < 1e-6);
  CHECK(w.sample(0.0) == doctest::Approx(0.5 * c.lambda_star).epsilon(1e-10));
  CHECK(c.lambda_star - w.w.front() < 1e-4);
  CHECK(w.w.back() < 1e-6);
  for (std::size_t i = 1; i + 1 < w.w.size(); ++i) CHECK(w.w[i] < w.w[i - 1] + 1e-14);

  const double oracle = left_rate_oracle(1.0, c.q);
  CHECK(oracle == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-12));
  CHECK(std::abs(w.decay_rate_left - oracle) / oracle < 0.02);
  // front tail is (x - x_c) e^{-sqrt(2 alpha) x}, so the fitted exponent
  // sits below sqrt(2 alpha) by roughly 1/x over the fit window
  CHECK(std::abs(w.decay_rate_right - std::sqrt(2.0)) < 0.2);
  CHECK(w.decay_rate_right < std::sqrt(2.0));
}

TEST_CASE("traveling wave for a non-unit quadratic") {
  const auto m = quadratic(2.0, 0.5);
  const auto c = solve_lambda_star(m);
  const auto w = traveling_wave(m, c, {});
  CHECK(w.residual_max < 1e-6);
  CHECK(w.sample(0.0) == doctest::Approx(0.5 * c.lambda_star).epsilon(1e-9));
  const double oracle = left_rate_oracle(2.0, c.q);
  CHECK(std::abs(w.decay_rate_left - oracle) / oracle < 0.02);
}

TEST_CASE("m(t) centering closed form") {
  const auto m = quadratic(1.0, 1.0);
  const auto c = solve_lambda_star(m);
  CHECK(m_center(c, m, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("wave-limit extraction converges to the BVP wave") {
  const auto m = quadratic(1.0, 1.0);
  const auto c = solve_lambda_star(m);
  const auto bvp = traveling_wave(m, c, {});

  GridSpec g;
  g.x_min = -20.0;
  g.x_max = 14.0;
  g.dx = 0.01;
  g.dt = 0.005;
  g.t_max = 15.0;
  g.moving_window = true;
  CauchyOptions opts;
  opts.snapshot_times = {7.5, 15.0};
  const auto u = solve_cauchy(m, c, TestFunction::zero(), PsiShift::none, g, opts);

  const auto w7 = extract_wave_limit(u, c, m, 7.5, -4.0, 6.0);
  const auto w15 = extract_wave_limit(u, c, m, 15.0, -4.0, 6.0);
  const double d7 = wave_sup_distance(w7, bvp, -3.0, 5.0);
  const double d15 = wave_sup_distance(w15, bvp, -3.0, 5.0);
  CHECK(d15 < d7);
  CHECK(d15 < 0.05);
  // right tail of the extracted profile decays toward zero
  CHECK(w15.w.back() < 0.05);
}

TEST_CASE("extraction window guard") {
  const auto m = quadratic(1.0, 1.0);
  const auto c = solve_lambda_star(m);
  GridSpec g;
  g.x_min = -12.0;
  g.x_max = 12.0;
  g.dx = 0.02;
  g.dt = 0.01;
  g.t_max = 2.0;
  CauchyOptions opts;
  opts.snapshot_times = {2.0};
  const auto u = solve_cauchy(m, c, TestFunction::zero(), PsiShift::none, g, opts);
  CHECK_THROWS_AS(extract_wave_limit(u, c, m, 2.0, -4.0, 60.0), ValidationError);
}
