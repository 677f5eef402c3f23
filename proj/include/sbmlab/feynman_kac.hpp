#pragma once

// Monte Carlo evaluation of the probabilistic representation
//   v(t, x) = E[ e^{-int_0^t psi'(lambda* + u*(t-r, x - B_r)) dr}; B_t <= x ]
//           + E int_0^t e^{-int_0^s ...} G-hat(t-s, x - B_s) ds
// against dense u* and G-hat histories from the PDE. An independent route to
// the same number the solver produces; the two must agree within noise plus
// a configured discretization allowance.

#include <cmath>
#include <cstdint>
#include <vector>

#include "sbmlab/common.hpp"
#include "sbmlab/fkpp.hpp"
#include "sbmlab/grid.hpp"
#include "sbmlab/mechanism.hpp"
#include "sbmlab/rng.hpp"
#include "sbmlab/skeleton.hpp"

namespace sbmlab {

struct FkOptions {
  long long n_paths = 100000;
  double dt = 5e-4;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct FkResult {
  SimEstimate estimate;  // v(t, x)
  double u1_mean = 0.0;  // no-branch part
  double u2_mean = 0.0;  // branching-integral part
};

inline FkResult feynman_kac_check(const BranchingMechanism& mech, const DerivedConstants& consts,
                                  const SpaceTimeField& ustar_history,
                                  const SpaceTimeField& ghat_history, double t, double x,
                                  const FkOptions& opts) {
  if (opts.n_paths < 100)
    throw ValidationError("feynman_kac_check: fewer than 100 paths is meaningless");
  if (ustar_history.times.back() < t - 1e-9)
    throw ValidationError("feynman_kac_check: u* history does not cover [0, t]");
  const long long n_steps = std::max<long long>(8, std::llround(t / opts.dt));
  const double dt = t / static_cast<double>(n_steps);
  const double sqdt = std::sqrt(dt);

  std::vector<double> vals(static_cast<std::size_t>(opts.n_paths));
  std::vector<double> u1s(static_cast<std::size_t>(opts.n_paths));
  auto zeta = [&](double tau, double y) {
    return eval_psi(mech, consts.lambda_star + ustar_history.sample(tau, y), 1);
  };
  detail::parallel_trees(opts.n_paths, opts.workers, [&](long long p) {
    RngStream rng(opts.seed, static_cast<std::uint64_t>(p));
    double b = 0.0;
    double disc = 0.0;  // int_0^s zeta dr, trapezoid
    double z_prev = zeta(t, x);
    double g_prev = ghat_history.sample(t, x);  // s = 0 integrand
    double u2 = 0.0;
    for (long long j = 1; j <= n_steps; ++j) {
      b += sqdt * rng.next_gaussian();
      const double s = dt * static_cast<double>(j);
      const double z_here = zeta(t - s, x - b);
      disc += 0.5 * dt * (z_prev + z_here);
      z_prev = z_here;
      const double g_here = std::exp(-disc) * ghat_history.sample(t - s, x - b);
      u2 += 0.5 * dt * (g_prev + g_here);
      g_prev = g_here;
    }
    const double u1 = (b <= x) ? std::exp(-disc) : 0.0;
    u1s[static_cast<std::size_t>(p)] = u1;
    vals[static_cast<std::size_t>(p)] = u1 + u2;
  });
  const double n = static_cast<double>(opts.n_paths);
  const double mean = pairwise_sum(vals) / n;
  std::vector<double> dev(vals.size());
  for (std::size_t i = 0; i < dev.size(); ++i) dev[i] = sq(vals[i] - mean);
  const double var = pairwise_sum(dev) / (n - 1.0);
  FkResult out;
  out.estimate =
      SimEstimate{mean, std::sqrt(var / n), opts.n_paths, opts.seed, opts.n_paths, false, 0.0};
  out.u1_mean = pairwise_sum(u1s) / n;
  out.u2_mean = mean - out.u1_mean;
  return out;
}

// Dense histories a Feynman-Kac check needs: u* and G-hat at every step of a
// triple solve over [0, t_max].
struct FkHistories {
  SpaceTimeField u_star;
  SpaceTimeField g_hat;
  SpaceTimeField v_direct;
};

inline FkHistories fk_histories(const BranchingMechanism& mech, const DerivedConstants& consts,
                                const GridSpec& grid, double cap_multiple = 100.0) {
  CauchyOptions opts;
  opts.cap_multiple = cap_multiple;
  opts.store_every_step = true;
  auto triple = compute_uv_triple(mech, consts, TestFunction::zero(), grid, opts);
  auto [ghat, g] = g_fields(triple.u, triple.u_star, triple.v_direct, mech, consts);
  (void)g;
  FkHistories out;
  out.u_star = std::move(triple.u_star);
  out.g_hat = std::move(ghat);
  out.v_direct = std::move(triple.v_direct);
  return out;
}

}  // namespace sbmlab
