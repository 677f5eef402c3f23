#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbmlab/feynman_kac.hpp"

using namespace sbmlab;

namespace {

struct Setup {
  BranchingMechanism mech;
  DerivedConstants consts;
  FkHistories hist;
};

Setup make_setup(double t_max) {
  Setup s;
  s.mech.alpha = 1.0;
  s.mech.beta = 1.0;
  s.consts = solve_lambda_star(s.mech);
  GridSpec g;
  g.x_min = -14.0;
  g.x_max = 14.0;
  g.dx = 0.02;
  g.dt = 0.01;
  g.t_max = t_max;
  s.hist = fk_histories(s.mech, s.consts, g);
  return s;
}

}  // namespace

TEST_CASE("path estimate agrees with the PDE at interior probes") {
  const auto s = make_setup(1.0);
  FkOptions opts;
  opts.n_paths = 30000;
  opts.dt = 1e-3;
  opts.seed = 41;
  opts.workers = 2;
  for (const auto& [t, x] : {std::pair{0.5, 0.0}, std::pair{0.5, 0.7}, std::pair{1.0, 1.0}}) {
    const auto r = feynman_kac_check(s.mech, s.consts, s.hist.u_star, s.hist.g_hat, t, x, opts);
    const double pde = s.hist.v_direct.sample(t, x);
    CHECK(std::abs(r.estimate.value - pde) <= 3.0 * r.estimate.std_error + 2e-3);
  }
}

TEST_CASE("x far right: indicator nearly sure, U1 bounded by e^{-qt}") {
  const auto s = make_setup(0.5);
  FkOptions opts;
  opts.n_paths = 5000;
  opts.dt = 1e-3;
  opts.seed = 4;
  const auto r = feynman_kac_check(s.mech, s.consts, s.hist.u_star, s.hist.g_hat, 0.5, 10.0, opts);
  // zeta >= q makes U1 <= e^{-qt} P(B_t <= x)
  CHECK(r.u1_mean <= std::exp(-s.consts.q * 0.5) + 3.0 * r.estimate.std_error);
  CHECK(r.estimate.value <= 1.0 + 1e-5);  // quadrature allowance; variance is zero here
  CHECK(r.estimate.value >= r.u1_mean);
}

TEST_CASE("U1 respects the discounted Gaussian bound at a left probe") {
  const auto s = make_setup(1.0);
  FkOptions opts;
  opts.n_paths = 20000;
  opts.dt = 1e-3;
  opts.seed = 8;
  const double t = 1.0, x = -1.0;
  const auto r = feynman_kac_check(s.mech, s.consts, s.hist.u_star, s.hist.g_hat, t, x, opts);
  CHECK(r.u1_mean <= std::exp(-s.consts.q * t) * norm_cdf(x / std::sqrt(t)) +
                         3.0 * r.estimate.std_error);
}

TEST_CASE("reproducible across worker counts; refusal below 100 paths") {
  const auto s = make_setup(0.5);
  FkOptions a, b;
  a.n_paths = b.n_paths = 2000;
  a.dt = b.dt = 2e-3;
  a.seed = b.seed = 77;
  a.workers = 1;
  b.workers = 2;
  const auto ra = feynman_kac_check(s.mech, s.consts, s.hist.u_star, s.hist.g_hat, 0.5, 0.0, a);
  const auto rb = feynman_kac_check(s.mech, s.consts, s.hist.u_star, s.hist.g_hat, 0.5, 0.0, b);
  CHECK(ra.estimate.value == rb.estimate.value);
  CHECK(ra.estimate.std_error == rb.estimate.std_error);

  FkOptions bad = a;
  bad.n_paths = 50;
  CHECK_THROWS_AS(feynman_kac_check(s.mech, s.consts, s.hist.u_star, s.hist.g_hat, 0.5, 0.0, bad),
                  ValidationError);
}
