#pragma once

// Acceptance suite: one function per criterion, each returning a pass/fail
// record with the measured numbers. Tolerances are pinned here. Heavy
// artifacts (waves, long solves) are shared through a lazy cache; a failed
// prerequisite marks its dependents skipped-with-reason instead of
// cascading exceptions.

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sbmlab/deviation.hpp"
#include "sbmlab/extinction.hpp"
#include "sbmlab/feynman_kac.hpp"
#include "sbmlab/fkpp.hpp"
#include "sbmlab/mechanism.hpp"
#include "sbmlab/sbm_particle.hpp"
#include "sbmlab/skeleton.hpp"
#include "sbmlab/wave.hpp"

namespace sbmlab {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  bool skipped = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  int workers = 2;
  std::uint64_t seed = 20240811;
};

namespace acceptance_detail {

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Shared artifacts, built on first use.
struct Cache {
  AcceptanceOptions opts;
  BranchingMechanism mech;  // the flagship quadratic alpha = beta = 1
  DerivedConstants consts;

  std::optional<TravelingWave> wave;
  std::optional<ExtinctionCurve> kcurve;
  std::optional<FieldTriple> triple30;   // moving window, snapshots 15/30
  std::optional<FieldTriple> triple40;   // shallow trend run
  std::optional<FkHistories> fk;
  std::string wave_error, triple30_error;

  Cache(const AcceptanceOptions& o) : opts(o) {
    mech.alpha = 1.0;
    mech.beta = 1.0;
    consts = solve_lambda_star(mech);
  }

  const TravelingWave& get_wave() {
    if (!wave) {
      try {
        wave = traveling_wave(mech, consts, {});
      } catch (const std::exception& e) {
        wave_error = e.what();
        throw;
      }
    }
    return *wave;
  }

  const ExtinctionCurve& get_kcurve() {
    if (!kcurve) kcurve = solve_k(mech, consts, 1e-3, 12.0, 1e-9);
    return *kcurve;
  }

  const FieldTriple& get_triple30() {
    if (!triple30) {
      GridSpec g;
      g.x_min = -26.0;
      g.x_max = 12.0;
      g.dx = 0.01;
      g.dt = 0.005;
      g.t_max = 30.0;
      g.moving_window = true;
      CauchyOptions copts;
      copts.snapshot_times = {15.0, 30.0};
      try {
        triple30 = compute_uv_triple(mech, consts, TestFunction::zero(), g, copts);
      } catch (const std::exception& e) {
        triple30_error = e.what();
        throw;
      }
    }
    return *triple30;
  }

  const FieldTriple& get_triple40() {
    if (!triple40) {
      GridSpec g;
      g.x_min = -32.0;
      g.x_max = 12.0;
      g.dx = 0.01;
      g.dt = 0.005;
      g.t_max = 40.0;
      g.moving_window = true;
      CauchyOptions copts;
      copts.snapshot_times = {10.0, 20.0, 30.0, 40.0};
      triple40 = compute_uv_triple(mech, consts, TestFunction::zero(), g, copts);
    }
    return *triple40;
  }

  const FkHistories& get_fk() {
    if (!fk) {
      GridSpec g;
      g.x_min = -14.0;
      g.x_max = 14.0;
      g.dx = 0.02;
      g.dt = 0.01;
      g.t_max = 2.0;
      fk = fk_histories(mech, consts, g);
    }
    return *fk;
  }
};

inline CriterionResult timed(int id, const std::string& title,
                             const std::function<std::pair<bool, std::string>()>& body) {
  CriterionResult r;
  r.id = id;
  r.title = title;
  const auto start = std::chrono::steady_clock::now();
  try {
    auto [pass, detail] = body();
    r.pass = pass;
    r.detail = detail;
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline double k_closed_unit(double t) { return 1.0 / std::expm1(t); }

}  // namespace acceptance_detail

inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {}) {
  using namespace acceptance_detail;
  Cache cache(opts);
  std::vector<CriterionResult> results;
  const auto& mech = cache.mech;
  const auto& consts = cache.consts;
  const double sqrt2 = std::sqrt(2.0);

  // 1. Derived constants, quadratic alpha = beta = 1.
  results.push_back(timed(1, "derived constants (quadratic)", [&] {
    const auto law = offspring_distribution(mech, consts, 5);
    double worst = std::abs(consts.lambda_star - 1.0);
    worst = std::max(worst, std::abs(consts.q - 1.0));
    worst = std::max(worst, std::abs(consts.rho - sqrt2));
    worst = std::max(worst, std::abs(law.p(2) - 1.0));
    worst = std::max(worst, std::abs(consts.survival_factor - 1.0 / std::expm1(1.0)));
    return std::pair{worst < 1e-10, "max abs error " + fmt(worst)};
  }));

  // 2. A-function closed form.
  results.push_back(timed(2, "A(lambda) = (1-lambda)^2 (quadratic)", [&] {
    double worst = 0.0;
    for (double l = 0.0; l <= 2.0 + 1e-12; l += 1e-3)
      worst = std::max(worst, std::abs(big_a(consts, mech, l) - sq(1.0 - l)));
    return std::pair{worst < 1e-12, "max abs error " + fmt(worst)};
  }));

  // 3. Rate-function continuity at the regime boundary and the
  // completed-square identity of the rate gap, on random draws.
  results.push_back(timed(3, "rate continuity and completed-square identity", [&] {
    RngStream rng(opts.seed, 3);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double alpha = 0.5 + 3.5 * rng.next_uniform();
      const double q = 0.1 + 7.9 * rng.next_uniform();
      const double delta = -3.0 + 4.0 * rng.next_uniform();
      const double rho = std::sqrt(1.0 + q / alpha);
      worst = std::max(worst, std::abs(q + alpha * sq(rho - 1.0) - 2.0 * alpha * rho * (rho - 1.0)));
      worst = std::max(worst, std::abs(q + alpha * delta * delta -
                                       2.0 * alpha * (rho - 1.0) * (1.0 - delta) -
                                       alpha * sq(rho - 1.0 + delta)));
    }
    return std::pair{worst < 1e-12, "max abs error " + fmt(worst)};
  }));

  // 4. Extinction ODE against the closed form.
  results.push_back(timed(4, "k(t) vs 1/(e^t - 1)", [&] {
    const auto& curve = cache.get_kcurve();
    double worst = 0.0;
    for (double t = 0.1; t <= 10.0 + 1e-9; t += 0.01) {
      const double kc = k_closed_unit(t);
      worst = std::max(worst, std::abs(curve.value(t) - kc) / kc);
    }
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < curve.t_nodes.size(); ++i) {
      const double a = std::exp(consts.q * curve.t_nodes[i]) * curve.k_values[i];
      const double b = std::exp(consts.q * curve.t_nodes[i + 1]) * curve.k_values[i + 1];
      if (b > a * (1.0 + 1e-12)) monotone = false;
    }
    return std::pair{worst < 1e-6 && monotone,
                     "max rel error " + fmt(worst) + (monotone ? ", e^{qt}k monotone" : ", e^{qt}k NOT monotone")};
  }));

  // 5. FKPP bounds suite on the solved grid, t_max = 10.
  results.push_back(timed(5, "FKPP bounds suite (t_max = 10)", [&] {
    GridSpec g;
    g.x_min = -20.0;
    g.x_max = 20.0;
    g.dx = 0.01;
    g.dt = 0.005;
    g.t_max = 10.0;
    CauchyOptions copts;
    copts.cap_multiple = 1e4;  // pushes the finite-cap floor below tolerance
    copts.snapshot_times = {0.5, 1.0, 2.0, 4.0, 7.0, 10.0};
    const auto triple = compute_uv_triple(mech, consts, TestFunction::zero(), g, copts);
    const auto [ghat, gfld] = g_fields(triple.u, triple.u_star, triple.v_direct, mech, consts);
    (void)gfld;
    const auto& kcurve = cache.get_kcurve();
    double v_range = 0.0, v_gauss = -1.0, u_order = 0.0, us_k = 0.0, ghat_bound = 0.0;
    for (std::size_t s = 1; s < triple.u.times.size(); ++s) {
      const double t = triple.u.times[s];
      const double kt = kcurve.value(t);
      for (std::size_t i = 0; i < triple.u.values[s].size(); ++i) {
        const double x = triple.u.x_at(s, i);
        const double vv = triple.v.values[s][i];
        const double vd = triple.v_direct.values[s][i];
        v_range = std::max({v_range, -vv, vv - 1.0});
        v_gauss = std::max(v_gauss, vd - norm_cdf(x / std::sqrt(t)));
        u_order = std::max(u_order, triple.u_star.values[s][i] - triple.u.values[s][i]);
        us_k = std::max(us_k, triple.u_star.values[s][i] - kt);
        ghat_bound = std::max(ghat_bound, ghat.values[s][i] - consts.q * vd * vd);
      }
    }
    const bool pass = v_range <= 0.0 && v_gauss <= 1e-6 && u_order <= 1e-10 && us_k <= 1e-8 &&
                      ghat_bound <= 1e-10;
    return std::pair{pass, "v range excess " + fmt(v_range) + ", gauss excess " + fmt(v_gauss) +
                               ", u>=u* excess " + fmt(u_order) + ", u*<=k excess " + fmt(us_k) +
                               ", Ghat<=qv^2 excess " + fmt(ghat_bound)};
  }));

  // 6. Feynman-Kac cross-oracle at six probes.
  results.push_back(timed(6, "Feynman-Kac cross-oracle", [&] {
    const auto& fk = cache.get_fk();
    FkOptions fopts;
    fopts.n_paths = 100000;
    fopts.dt = 5e-4;
    fopts.seed = opts.seed;
    fopts.workers = opts.workers;
    bool pass = true;
    std::string detail;
    for (double t : {0.5, 1.0, 2.0}) {
      for (double x : {0.0, std::sqrt(t)}) {
        const auto r = feynman_kac_check(mech, consts, fk.u_star, fk.g_hat, t, x, fopts);
        const double pde = fk.v_direct.sample(t, x);
        const double gap = std::abs(r.estimate.value - pde);
        const double tol = 3.0 * r.estimate.std_error + 2e-3;
        if (gap > tol) pass = false;
        detail += "(t=" + fmt(t) + ",x=" + fmt(x) + ") gap " + fmt(gap) + " tol " + fmt(tol) + "; ";
      }
    }
    return std::pair{pass, detail};
  }));

  // 7. Traveling wave: residual, left decay, wave-limit extraction at t = 30.
  results.push_back(timed(7, "traveling wave and wave-limit extraction", [&] {
    const auto& w = cache.get_wave();
    const auto& triple = cache.get_triple30();
    const double mu_oracle = sqrt2 * (consts.rho - 1.0);
    const double rate_err = std::abs(w.decay_rate_left - mu_oracle) / mu_oracle;
    const auto extracted = extract_wave_limit(triple.u, consts, mech, 30.0, -4.0, 6.0);
    const double dist = wave_sup_distance(extracted, w, -3.0, 5.0);
    const bool pass = w.residual_max < 1e-6 && rate_err < 0.02 && dist < 0.05;
    return std::pair{pass, "residual " + fmt(w.residual_max) + ", decay rel err " + fmt(rate_err) +
                               ", extraction sup dist " + fmt(dist)};
  }));

  // 8. G-hat along the front approaches A(w(z)); trend check in t.
  results.push_back(timed(8, "Ghat(t, m_t + z) -> A(w(z))", [&] {
    const auto& w = cache.get_wave();
    const auto& triple = cache.get_triple30();
    const auto [ghat, gfld] = g_fields(triple.u, triple.u_star, triple.v_direct, mech, consts);
    (void)gfld;
    auto sup_gap = [&](double t) {
      const std::size_t snap = ghat.snapshot_index(t);
      const auto extracted = extract_wave_limit(triple.u, consts, mech, t, -4.0, 6.0);
      const double zc = extracted.crossing;
      const double m = m_center(consts, mech, t);
      double worst = 0.0;
      for (double z = -3.0; z <= 5.0 + 1e-12; z += 0.01) {
        const double gh = ghat.sample_at_snapshot(snap, m + zc + z);
        worst = std::max(worst, std::abs(gh - big_a(consts, mech, w.sample(z))));
      }
      return worst;
    };
    const double g15 = sup_gap(15.0), g30 = sup_gap(30.0);
    const bool pass = g30 < 0.05 && g30 < g15;
    return std::pair{pass, "sup gap t=15: " + fmt(g15) + ", t=30: " + fmt(g30)};
  }));

  // 9. Skeleton Monte Carlo vs the BBM max-CDF PDE; the small-population
  // bound P(pop <= k) <= k e^{-qt}; the discounted-Gaussian envelope.
  results.push_back(timed(9, "skeleton MC vs BBM-CDF PDE, population bound, envelope", [&] {
    SkeletonConfig cfg;
    cfg.consts = consts;
    cfg.offspring = offspring_distribution(mech, consts, 5);
    cfg.alpha = mech.alpha;
    cfg.t_horizon = 2.0;
    cfg.dt_path = 0.005;
    GridSpec g;
    g.x_min = -14.0;
    g.x_max = 14.0;
    g.dx = 0.01;
    g.dt = 0.005;
    g.t_max = 2.0;
    CauchyOptions copts;
    copts.snapshot_times = {2.0};
    const auto F = solve_bbm_cdf(mech, consts, g, copts);
    bool pass = true;
    std::string detail;
    for (double x : {0.0, 1.0, 2.0, 3.0}) {
      const auto est = estimate_max_cdf(cfg, x, 100000, opts.seed + 9, opts.workers);
      const double oracle = F.sample_at_snapshot(1, x);
      const double gap = std::abs(est.estimate.value - oracle);
      if (gap > 3.0 * est.estimate.std_error + 1e-3) pass = false;
      const double envelope = max_cdf_upper_envelope(cfg, 2.0, x);
      if (est.estimate.value > envelope + 3.0 * est.estimate.std_error) pass = false;
      detail += "x=" + fmt(x) + " gap " + fmt(gap) + " (3se " +
                fmt(3.0 * est.estimate.std_error) + "); ";
    }
    for (double t : {1.0, 2.0}) {
      SkeletonConfig cfg_t = cfg;
      cfg_t.t_horizon = t;
      cfg_t.dt_path = 0.005 * t;
      long long small_pop = 0;
      const long long n = 100000;
      for (long long i = 0; i < n; ++i)
        if (simulate_tree(cfg_t, opts.seed + 90, static_cast<std::uint64_t>(i)).population <= 3)
          ++small_pop;
      const double p = static_cast<double>(small_pop) / n;
      const double se = std::sqrt(p * (1 - p) / n);
      if (p > 3.0 * std::exp(-consts.q * t) + 3.0 * se) pass = false;
      detail += "pop bound t=" + fmt(t) + ": " + fmt(p) + " <= " + fmt(3.0 * std::exp(-t)) + "; ";
    }
    return std::pair{pass, detail};
  }));

  // 10. Critical s-integral against the Gamma closed form.
  results.push_back(timed(10, "critical s-integral vs Gamma", [&] {
    const double p = 1.5 * (consts.rho - 1.0);
    const double cc = mech.alpha * sq(consts.rho);
    const double gamma_val = critical_s_integral_gamma(p, cc);
    const double quad_val = critical_s_integral_quadrature(p, cc);
    const double rel = std::abs(quad_val - gamma_val) / gamma_val;
    return std::pair{rel < 1e-8, "rel err " + fmt(rel)};
  }));

  // 11. Shallow-regime scaled trend, delta = 0.7.
  results.push_back(timed(11, "shallow trend delta = 0.7 (t up to 40)", [&] {
    const auto& triple = cache.get_triple40();
    const auto cls = classify(consts, 0.7);
    const auto trend = scaled_trend(consts, cls, triple.v_direct, {10.0, 20.0, 30.0, 40.0},
                                    mech.alpha);
    bool decreasing = trend.diffs.size() == 3 && trend.diffs[1] < trend.diffs[0] &&
                      trend.diffs[2] < trend.diffs[1];
    // prefactor from the BVP wave re-based to the PDE's translate at t = 40
    const auto& w = cache.get_wave();
    const auto extracted = extract_wave_limit(triple.u, consts, mech, 40.0, -4.0, 6.0);
    TravelingWave rebased = w;
    rebased.x0 += extracted.crossing;
    rebased.crossing = extracted.crossing;
    const auto law = asymptotic_law_wave(consts, cls, rebased, mech);
    const double target = std::log(law.prefactor / consts.survival_factor);
    const double gap = std::abs(trend.y.back() - target);
    return std::pair{decreasing && gap < 0.25,
                     std::string(decreasing ? "diffs decreasing" : "diffs NOT decreasing") +
                         ", |y(40) - log pref| = " + fmt(gap)};
  }));

  // 12. Deep-regime scaled trend, delta = -1.
  results.push_back(timed(12, "deep trend delta = -1 (t up to 15)", [&] {
    GridSpec g;
    g.x_min = -55.0;
    g.x_max = 15.0;
    g.dx = 0.01;
    g.dt = 0.005;
    g.t_max = 15.0;
    CauchyOptions copts;
    copts.cap_multiple = 1e6;  // keeps the cap floor far below v ~ e^{-2t}
    copts.snapshot_times = {5.0, 10.0, 15.0};
    const auto triple = compute_uv_triple(mech, consts, TestFunction::zero(), g, copts);
    const auto cls = classify(consts, -1.0);
    if (std::abs(rate_of(consts, mech.alpha, cls) - 2.0) > 1e-12)
      return std::pair{false, std::string("rate formula broken")};
    const auto trend = scaled_trend(consts, cls, triple.v_direct, {5.0, 10.0, 15.0}, mech.alpha);
    const bool decreasing = trend.diffs.size() == 2 && trend.diffs[1] < trend.diffs[0];
    std::string ys;
    for (double y : trend.y) ys += fmt(y) + " ";
    return std::pair{decreasing, "y = [ " + ys + "], diffs " +
                                     (decreasing ? "decreasing" : "NOT decreasing")};
  }));

  // 13. Conditional first-branching-time concentration: tau/t tends to
  // (1 - delta)/rho in the shallow regime (the time-reversed saddle
  // variable s = t - tau sits at a_delta t).
  results.push_back(timed(13, "conditional tau concentration", [&] {
    SkeletonConfig cfg;
    cfg.consts = consts;
    cfg.offspring = offspring_distribution(mech, consts, 5);
    cfg.alpha = mech.alpha;
    bool pass = true;
    std::string detail;
    const double center = tau_center_fraction(consts, 0.7);
    double errs[2];
    int idx = 0;
    for (double t : {4.0, 8.0}) {
      cfg.t_horizon = t;
      cfg.dt_path = 0.005 * t;
      const double x = sqrt2 * 0.7 * t;
      const double predicted = max_cdf_upper_envelope(cfg, t, x);
      const auto stats =
          conditional_tau_sample(cfg, 0.7, 20000, opts.seed + 13, predicted, 1e-5, opts.workers);
      errs[idx++] = std::abs(stats.mean_tau / t - center);
      detail += "t=" + fmt(t) + " mean tau/t " + fmt(stats.mean_tau / t) + "; ";
    }
    if (!(errs[1] < 0.15 && errs[1] <= errs[0])) pass = false;
    detail += "target " + fmt(center) + "; ";
    // deep regime: median(t - tau) over branched runs small and stable in t;
    // the censored share (no branching at all) is the U1 term of the
    // prefactor and is reported alongside.
    double med[2];
    idx = 0;
    for (double t : {4.0, 6.0}) {
      cfg.t_horizon = t;
      cfg.dt_path = 0.005 * t;
      const auto stats = conditional_tau_sample(cfg, -1.0, 400, opts.seed + 14,
                                                max_cdf_upper_envelope(cfg, t, -sqrt2 * t), 1e-7,
                                                opts.workers);
      med[idx++] = stats.median_t_minus_tau;
      detail += "deep t=" + fmt(t) + " med(t-tau|branched) " + fmt(stats.median_t_minus_tau) +
                " censored " + fmt(stats.censored_fraction) + "; ";
    }
    if (!(med[0] <= 3.0 && med[1] <= 3.0 && std::abs(med[1] - med[0]) < 1.5)) pass = false;
    return std::pair{pass, detail};
  }));

  // 14. Particle SBM against the PDE and the extinction probability. The
  // PDE target needs a large cap: the soft-barrier error decays only like
  // 1/sqrt(cap) near the front at early times, and the default 100 lambda*
  // sits 0.03 below the theta -> infinity limit at (t, x) = (1, 1).
  results.push_back(timed(14, "particle SBM vs PDE; extinction; M-trend", [&] {
    GridSpec g;
    g.x_min = -14.0;
    g.x_max = 14.0;
    g.dx = 0.01;
    g.dt = 0.005;
    g.t_max = 1.0;
    CauchyOptions copts;
    copts.snapshot_times = {1.0};
    copts.cap_multiple = 1e6;
    const auto u = solve_cauchy(mech, consts, TestFunction::zero(), PsiShift::none, g, copts);
    const double target = std::exp(-u.sample_at_snapshot(1, 1.0));
    bool pass = true;
    std::string detail;
    double bias_by_m[3];
    int idx = 0;
    for (int mass : {50, 100, 200}) {
      ParticleConfig cfg;
      cfg.mech = mech;
      cfg.mass_scale = mass;
      cfg.t_horizon = 1.0;
      const long long n = (mass == 200) ? 30000 : 40000;
      const auto est = estimate_sup_cdf(cfg, 1.0, n, opts.seed + mass, opts.workers);
      bias_by_m[idx++] = std::abs(est.estimate.value - target);
      if (mass == 200 &&
          std::abs(est.estimate.value - target) > 3.0 * est.estimate.std_error + 0.02)
        pass = false;
      detail += "M=" + fmt(mass) + " bias " + fmt(std::abs(est.estimate.value - target)) + "; ";
    }
    if (!(bias_by_m[2] <= bias_by_m[0])) pass = false;
    ParticleConfig ext_cfg;
    ext_cfg.mech = mech;
    ext_cfg.mass_scale = 200;
    ext_cfg.t_horizon = 8.0;
    const auto ext = extinction_frequency(ext_cfg, 5000, opts.seed + 140, opts.workers);
    const double ext_gap = std::abs(ext.value - std::exp(-1.0));
    if (ext_gap > 3.0 * ext.std_error + 0.02) pass = false;
    detail += "extinction gap " + fmt(ext_gap) + " (3se " + fmt(3.0 * ext.std_error) + ")";
    return std::pair{pass, detail};
  }));

  // 15. Inequality suite; empirical lemma constant finite and t-stable.
  results.push_back(timed(15, "inequality suite and front-tail envelope constant", [&] {
    const auto rep = inequality_suite(consts, mech, 100000, opts.seed + 15);
    const auto& triple = cache.get_triple40();
    const double mu = sqrt2 * (consts.rho - 1.0);
    const double c20 = front_tail_constant(triple.v_direct, consts, mech, 20.0, 0.1 * mu, 14.0);
    const double c40 = front_tail_constant(triple.v_direct, consts, mech, 40.0, 0.1 * mu, 14.0);
    const bool stable = std::isfinite(c20) && std::isfinite(c40) && c20 > 0.0 &&
                        std::abs(std::log(c40 / c20)) < 0.7;
    return std::pair{rep.ok && stable,
                     "rate-gap min " + fmt(rep.rate_gap_min) + ", gaussian-min violation " +
                         fmt(rep.gaussian_min_violation) + ", c_eps(20) " + fmt(c20) + ", c_eps(40) " +
                         fmt(c40)};
  }));

  // 16. Limiting-measure Laplace ratio: 1 at f = 0, decreasing in the step
  // height, always inside (0, 1].
  results.push_back(timed(16, "limit measure ratio monotone in step height", [&] {
    const auto& triple = cache.get_triple30();
    const auto base = extract_wave_limit(triple.u, consts, mech, 30.0, -10.0, 8.0);
    const auto cls = classify(consts, 0.5);
    const double r0 = limit_measure_ratio(consts, base, base, mech, cls);
    bool pass = (r0 == 1.0);
    std::string detail = "f=0 ratio " + fmt(r0) + "; ";
    GridSpec g;
    g.x_min = -26.0;
    g.x_max = 12.0;
    g.dx = 0.01;
    g.dt = 0.005;
    g.t_max = 30.0;
    g.moving_window = true;
    double prev = 1.0;
    for (double height : {0.25, 0.5, 1.0}) {
      CauchyOptions copts;
      copts.snapshot_times = {30.0};
      const auto f = TestFunction::step(height, -1.0, 0.0);
      const auto uf = solve_cauchy(mech, consts, f, PsiShift::none, g, copts);
      const auto wf = extract_wave_limit(uf, consts, mech, 30.0, -10.0, 8.0);
      const double ratio = limit_measure_ratio(consts, wf, base, mech, cls);
      if (!(ratio > 0.0 && ratio <= 1.0 && ratio < prev)) pass = false;
      detail += "h=" + fmt(height) + " ratio " + fmt(ratio) + "; ";
      prev = ratio;
    }
    return std::pair{pass, detail};
  }));

  return results;
}

}  // namespace sbmlab
