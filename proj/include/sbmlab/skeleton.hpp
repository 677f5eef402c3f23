#pragma once

// Monte Carlo simulator of the skeleton branching Brownian motion: branching
// rate q, offspring law from the mechanism, standard Brownian motion in
// between. Transitions are sampled exactly (event-driven over lifetimes), so
// the fixed-time observables carry no discretization bias. Trees are
// independent across counter-based streams keyed by (seed, tree index), and
// every reduction is a fixed-order sum over tree index, so estimates do not
// depend on worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "sbmlab/common.hpp"
#include "sbmlab/mechanism.hpp"
#include "sbmlab/rng.hpp"

namespace sbmlab {

struct SkeletonConfig {
  DerivedConstants consts;
  OffspringLaw offspring;
  double alpha = 1.0;     // diffusion normalization (front speed sqrt(2 alpha))
  double t_horizon = 1.0;
  double dt_path = 1e-3;  // contract field; the event-driven core samples
                          // transitions exactly and does not consume it
  long long population_cap = 1000000;

  void validate() const {
    if (!(t_horizon > 0.0)) throw ValidationError("skeleton: t_horizon must be > 0");
    if (!(dt_path > 0.0 && dt_path <= 0.01 * t_horizon))
      throw ValidationError("skeleton: dt_path must be <= 0.01 * t_horizon");
    if (population_cap < 10000)
      throw ValidationError("skeleton: population_cap must be >= 1e4");
    if (offspring.probabilities.empty())
      throw ValidationError("skeleton: offspring law is empty");
  }
};

struct TreeObservables {
  double max_position = -std::numeric_limits<double>::infinity();
  long long population = 0;
  double first_branch_time = std::numeric_limits<double>::infinity();
  bool capped = false;
};

namespace detail {

struct PendingParticle {
  double birth_time;
  double position;
};

}  // namespace detail

// Full tree: population at the horizon, max position, root branch time.
inline TreeObservables simulate_tree(const SkeletonConfig& cfg, std::uint64_t seed,
                                     std::uint64_t tree_index) {
  RngStream rng(seed, tree_index);
  TreeObservables obs;
  std::vector<detail::PendingParticle> stack;
  stack.push_back({0.0, 0.0});
  bool root = true;
  long long created = 1;
  while (!stack.empty()) {
    const auto p = stack.back();
    stack.pop_back();
    const double life = rng.next_exponential(cfg.consts.q);
    const double death = p.birth_time + life;
    if (death >= cfg.t_horizon) {
      const double dt = cfg.t_horizon - p.birth_time;
      const double x = p.position + std::sqrt(dt) * rng.next_gaussian();
      obs.population += 1;
      obs.max_position = std::max(obs.max_position, x);
      if (root) root = false;
      continue;
    }
    if (root) {
      obs.first_branch_time = death;
      root = false;
    }
    const double x = p.position + std::sqrt(life) * rng.next_gaussian();
    const int children = cfg.offspring.sample(rng);
    created += children;
    if (created > cfg.population_cap) {
      obs.capped = true;
      return obs;
    }
    for (int k = 0; k < children; ++k) stack.push_back({death, x});
  }
  return obs;
}

struct MaxIndicator {
  bool below = false;  // every particle at the horizon sits at or below x
  double first_branch_time = std::numeric_limits<double>::infinity();
  bool capped = false;
};

// Lazy evaluation of {M_t^Z <= x}: depth-first, abort on the first particle
// above the level. Rejected trees cost about one lineage; accepted trees,
// which are rare and small under deep conditioning, are traversed fully.
inline MaxIndicator max_below(const SkeletonConfig& cfg, double x, std::uint64_t seed,
                              std::uint64_t tree_index) {
  RngStream rng(seed, tree_index);
  MaxIndicator out;
  std::vector<detail::PendingParticle> stack;
  stack.push_back({0.0, 0.0});
  bool root = true;
  long long created = 1;
  while (!stack.empty()) {
    const auto p = stack.back();
    stack.pop_back();
    const double life = rng.next_exponential(cfg.consts.q);
    const double death = p.birth_time + life;
    if (death >= cfg.t_horizon) {
      const double dt = cfg.t_horizon - p.birth_time;
      const double pos = p.position + std::sqrt(dt) * rng.next_gaussian();
      if (root) root = false;
      if (pos > x) return out;  // witness above the level
      continue;
    }
    if (root) {
      out.first_branch_time = death;
      root = false;
    }
    const double pos = p.position + std::sqrt(life) * rng.next_gaussian();
    const int children = cfg.offspring.sample(rng);
    created += children;
    if (created > cfg.population_cap) {
      out.capped = true;
      return out;
    }
    for (int k = 0; k < children; ++k) stack.push_back({death, pos});
  }
  out.below = true;
  return out;
}

namespace detail {

// Chunked deterministic parallel map over tree indices.
template <typename Fn>
void parallel_trees(long long n, int workers, const Fn& fn) {
  if (workers <= 1) {
    for (long long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long long> next{0};
  const long long chunk = 1024;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const long long start = next.fetch_add(chunk);
        if (start >= n) return;
        const long long stop = std::min(n, start + chunk);
        for (long long i = start; i < stop; ++i) fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

struct MaxCdfEstimate {
  SimEstimate estimate;
  long long excluded_capped = 0;  // runs dropped at the population cap, reported
};

// Frequency estimate of P(M_t^Z <= x) with binomial standard error.
inline MaxCdfEstimate estimate_max_cdf(const SkeletonConfig& cfg, double x, long long n_samples,
                                       std::uint64_t seed, int workers = 1) {
  cfg.validate();
  if (n_samples < 1000) throw ValidationError("estimate_max_cdf: n_samples must be >= 1e3");
  std::vector<std::uint8_t> below(static_cast<std::size_t>(n_samples), 0);
  std::vector<std::uint8_t> capped(static_cast<std::size_t>(n_samples), 0);
  detail::parallel_trees(n_samples, workers, [&](long long i) {
    const auto ind = max_below(cfg, x, seed, static_cast<std::uint64_t>(i));
    below[static_cast<std::size_t>(i)] = ind.below ? 1 : 0;
    capped[static_cast<std::size_t>(i)] = ind.capped ? 1 : 0;
  });
  long long hits = 0, dropped = 0;
  for (long long i = 0; i < n_samples; ++i) {
    if (capped[static_cast<std::size_t>(i)]) {
      ++dropped;
      continue;
    }
    hits += below[static_cast<std::size_t>(i)];
  }
  const long long n_eff = n_samples - dropped;
  MaxCdfEstimate out;
  out.excluded_capped = dropped;
  out.estimate.n_samples = n_eff;
  out.estimate.seed = seed;
  out.estimate.stream_count = n_samples;
  const double p = static_cast<double>(hits) / static_cast<double>(n_eff);
  out.estimate.value = p;
  out.estimate.std_error = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n_eff));
  if (hits == 0) {
    out.estimate.zero_successes = true;
    out.estimate.upper95 = 3.0 / static_cast<double>(n_eff);
  }
  return out;
}

// Envelope (2qt + 1) sup_{0 <= s <= t} e^{-qs} P(B_1 <= (x - sqrt(2a)(t - s) + sqrt(t))/sqrt(s)).
inline double max_cdf_upper_envelope(const SkeletonConfig& cfg, double t, double x) {
  const double q = cfg.consts.q;
  const double speed = std::sqrt(2.0 * cfg.alpha);
  auto value = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double arg = (x - speed * (t - s) + std::sqrt(t)) / std::sqrt(s);
    return std::exp(-q * s) * norm_cdf(arg);
  };
  double best = 0.0;
  const int n = 20000;
  for (int i = 1; i <= n; ++i) best = std::max(best, value(t * i / n));
  return (2.0 * q * t + 1.0) * best;
}

struct TauStats {
  std::vector<double> taus;        // accepted first-branch times (inf-marker kept)
  double acceptance_rate = 0.0;
  long long tries = 0;
  long long accepted = 0;
  long long censored = 0;          // accepted trees whose root never branched
  double censored_fraction = 0.0;  // their share (the U1 term of the prefactor)
  double mean_tau = 0.0;           // over finite taus
  double median_t_minus_tau = 0.0; // over finite taus; degenerate otherwise
  double window_fraction = 0.0;    // paper window for the regime of delta
  double quantile(double p) const {
    std::vector<double> finite;
    for (double t : taus)
      if (std::isfinite(t)) finite.push_back(t);
    if (finite.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(finite.begin(), finite.end());
    const std::size_t i = std::min(finite.size() - 1,
                                   static_cast<std::size_t>(p * static_cast<double>(finite.size())));
    return finite[i];
  }
};

struct TauWindow {
  double lo = 0.0;
  double hi = 0.0;
};

// Concentration window for the first branching time, by regime. In the
// shallow regime tau/t concentrates at (1 - delta)/rho = 1 - a_delta: the
// saddle of the branching-time integral sits at s = a_delta t in the
// time-reversed variable s = t - tau.
inline double tau_center_fraction(const DerivedConstants& c, double delta) {
  return (1.0 - delta) / c.rho;
}

inline TauWindow tau_window(const SkeletonConfig& cfg, double delta, double deep_T = 3.0) {
  const double t = cfg.t_horizon;
  const double rho = cfg.consts.rho;
  const double lt = std::log(t);
  if (delta > 1.0 - rho) {
    const double center = tau_center_fraction(cfg.consts, delta) * t;
    return {center - lt * std::sqrt(t), center + lt * std::sqrt(t)};
  }
  if (delta == 1.0 - rho) return {t - lt * std::sqrt(t), t - std::pow(t, 0.25)};
  return {t - deep_T, std::numeric_limits<double>::infinity()};
}

// Rejection sampling of tau conditioned on {M_t^Z <= sqrt(2 alpha) delta t}.
// `predicted_rate` comes from the PDE oracle or the envelope; sampling is
// refused when it sits below `min_rate`.
inline TauStats conditional_tau_sample(const SkeletonConfig& cfg, double delta,
                                       long long n_accepted_target, std::uint64_t seed,
                                       double predicted_rate, double min_rate = 1e-5,
                                       int workers = 1, double deep_T = 3.0) {
  cfg.validate();
  if (!(delta < 1.0)) throw ValidationError("conditional_tau_sample: need delta < 1");
  if (predicted_rate < min_rate)
    throw NumericalError("conditional_tau_sample: predicted acceptance rate " +
                         std::to_string(predicted_rate) + " below feasibility threshold " +
                         std::to_string(min_rate));
  const double x = std::sqrt(2.0 * cfg.alpha) * delta * cfg.t_horizon;
  TauStats stats;
  // The try budget is keyed to the feasibility floor the caller accepted,
  // not to the (often optimistic) predicted rate; a mid-run rate check
  // bails out early when the true rate sits clearly below the floor.
  const long long budget =
      static_cast<long long>(std::min(1e10, 40.0 * static_cast<double>(n_accepted_target) /
                                                 std::max(min_rate, 1e-9)));
  const long long chunk = 65536;
  std::vector<std::uint8_t> acc(static_cast<std::size_t>(chunk));
  std::vector<double> tau(static_cast<std::size_t>(chunk));
  long long tries = 0, accepted_total = 0;
  while (stats.accepted < n_accepted_target && tries < budget) {
    const long long m = std::min(chunk, budget - tries);
    detail::parallel_trees(m, workers, [&](long long j) {
      const auto ind = max_below(cfg, x, seed, static_cast<std::uint64_t>(tries + j));
      acc[static_cast<std::size_t>(j)] = (ind.below && !ind.capped) ? 1 : 0;
      tau[static_cast<std::size_t>(j)] = ind.first_branch_time;
    });
    for (long long j = 0; j < m; ++j) {
      if (!acc[static_cast<std::size_t>(j)]) continue;
      ++accepted_total;
      if (stats.accepted < n_accepted_target) {
        stats.taus.push_back(tau[static_cast<std::size_t>(j)]);
        ++stats.accepted;
      }
    }
    tries += m;
    if (tries >= 4000000 && stats.accepted < n_accepted_target) {
      const double measured = static_cast<double>(accepted_total) / static_cast<double>(tries);
      if (measured < 0.25 * min_rate)
        throw NumericalError("conditional_tau_sample: measured acceptance rate " +
                             std::to_string(measured) + " sits below the feasibility floor");
    }
  }
  stats.tries = tries;
  stats.acceptance_rate = static_cast<double>(accepted_total) / static_cast<double>(tries);
  if (stats.accepted < n_accepted_target)
    throw NumericalError("conditional_tau_sample: acceptance rate " +
                         std::to_string(stats.acceptance_rate) +
                         " too low to reach the target within budget");

  const auto window = tau_window(cfg, delta, deep_T);
  double sum = 0.0;
  long long finite_count = 0, in_window = 0;
  std::vector<double> t_minus;
  t_minus.reserve(stats.taus.size());
  for (double tv : stats.taus) {
    if (std::isfinite(tv)) {
      sum += tv;
      ++finite_count;
      if (tv >= window.lo && tv <= window.hi) ++in_window;
      t_minus.push_back(cfg.t_horizon - tv);
    } else {
      ++stats.censored;
      if (std::isinf(window.hi)) ++in_window;  // deep regime window is one-sided
    }
  }
  stats.censored_fraction =
      static_cast<double>(stats.censored) / static_cast<double>(stats.taus.size());
  stats.mean_tau = finite_count > 0 ? sum / static_cast<double>(finite_count) : 0.0;
  if (!t_minus.empty()) {
    std::sort(t_minus.begin(), t_minus.end());
    stats.median_t_minus_tau = t_minus[t_minus.size() / 2];
  } else {
    stats.median_t_minus_tau = std::numeric_limits<double>::quiet_NaN();
  }
  stats.window_fraction = static_cast<double>(in_window) / static_cast<double>(stats.taus.size());
  return stats;
}

}  // namespace sbmlab
