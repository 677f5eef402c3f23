#pragma once

// Task orchestration for the batch front-end: every run writes a manifest
// first (resolved config, artifact version, outcome), then the task's data
// artifacts. Outputs are deterministic for a fixed config and seed; the
// manifest is the only file carrying volatile metadata.

#include <chrono>
#include <fstream>
#include <string>

#include "sbmlab/acceptance.hpp"
#include "sbmlab/config.hpp"
#include "sbmlab/deviation.hpp"
#include "sbmlab/extinction.hpp"
#include "sbmlab/feynman_kac.hpp"
#include "sbmlab/fkpp.hpp"
#include "sbmlab/io.hpp"
#include "sbmlab/sbm_particle.hpp"
#include "sbmlab/skeleton.hpp"
#include "sbmlab/wave.hpp"

namespace sbmlab {

constexpr const char* kArtifactVersion = "1.0.0";

namespace run_detail {

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
  return cfg.output_dir + "/" + name;
}

inline void write_manifest(const RunConfig& cfg, const std::string& status,
                           const std::string& message = "") {
  json m;
  m["artifact_version"] = kArtifactVersion;
  m["resolved_config"] = resolved_config_json(cfg);
  m["status"] = status;
  if (!message.empty()) m["message"] = message;
  m["wall_clock_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  std::ofstream os(out_path(cfg, "manifest.json"));
  if (!os) throw ValidationError("cannot write manifest in " + cfg.output_dir);
  os << m.dump(2) << "\n";
}

inline GridSpec default_grid(double t_max) {
  GridSpec g;
  g.x_min = -20.0;
  g.x_max = 20.0;
  g.dx = 0.01;
  g.dt = 0.005;
  g.t_max = t_max;
  return g;
}

inline void task_derive(const RunConfig& cfg, KvReport& kv) {
  const auto consts = solve_lambda_star(cfg.mechanism);
  const auto law = offspring_distribution(cfg.mechanism, consts, cfg.params.n_max_offspring);
  const auto hyp = validate_hypotheses(cfg.mechanism);
  kv.add_group("derived constants");
  kv.add("lambda_star", consts.lambda_star);
  kv.add("q", consts.q);
  kv.add("rho", consts.rho);
  kv.add("extinction_prob", consts.extinction_prob);
  kv.add("survival_factor", consts.survival_factor);
  kv.add_group("offspring law");
  for (int n = 2; n <= std::min(law.n_max, 12); ++n)
    kv.add("p_" + std::to_string(n), law.p(n));
  kv.add("truncation_mass", law.truncation_mass);
  kv.add("offspring_mean", law.mean());
  auto tri = [](TriState t) {
    return t == TriState::holds ? "holds" : (t == TriState::fails ? "fails" : "not-checkable");
  };
  kv.add_group("hypotheses");
  kv.add("h1", tri(hyp.h1_ok));
  kv.add("h2", tri(hyp.h2_ok));
  kv.add("grey", tri(hyp.grey_ok));
  if (hyp.h2_witness) {
    kv.add("h2_vartheta", hyp.h2_witness->vartheta);
    kv.add("h2_a", hyp.h2_witness->a);
    kv.add("h2_b", hyp.h2_witness->b);
  }
}

inline void task_solve_fkpp(const RunConfig& cfg, KvReport& kv) {
  const auto consts = solve_lambda_star(cfg.mechanism);
  GridSpec grid = cfg.params.grid.value_or(default_grid(2.0));
  CauchyOptions opts;
  opts.cap_multiple = cfg.params.cap_multiple;
  opts.snapshot_times = cfg.params.snapshot_times.empty()
                            ? std::vector<double>{grid.t_max}
                            : cfg.params.snapshot_times;
  const auto triple = compute_uv_triple(cfg.mechanism, consts, cfg.params.f, grid, opts);
  const auto [ghat, g] = g_fields(triple.u, triple.u_star, triple.v_direct, cfg.mechanism, consts);
  if (cfg.emit.count("csv")) {
    triple.u.write_columnar_file(out_path(cfg, "u.csv"));
    triple.u_star.write_columnar_file(out_path(cfg, "u_star.csv"));
    triple.v.write_columnar_file(out_path(cfg, "v.csv"));
    triple.v_direct.write_columnar_file(out_path(cfg, "v_scaled.csv"));
    ghat.write_columnar_file(out_path(cfg, "g_hat.csv"));
    g.write_columnar_file(out_path(cfg, "g.csv"));
  }
  kv.add("snapshots", static_cast<double>(triple.u.times.size()));
  kv.add("final_time", triple.u.times.back());
  kv.add("u_at_origin_final", triple.u.sample_at_snapshot(triple.u.times.size() - 1, 0.0));
}

inline void task_wave(const RunConfig& cfg, KvReport& kv) {
  const auto consts = solve_lambda_star(cfg.mechanism);
  WaveOptions wopts;
  wopts.dx = cfg.params.wave_dx;
  wopts.tol = cfg.params.wave_tol;
  const auto w = traveling_wave(cfg.mechanism, consts, wopts);
  kv.add("residual_max", w.residual_max);
  kv.add("decay_rate_left", w.decay_rate_left);
  kv.add("decay_rate_left_oracle", std::sqrt(2.0 * cfg.mechanism.alpha) * (consts.rho - 1.0));
  kv.add("decay_rate_right", w.decay_rate_right);
  kv.add("normalization_w0", w.sample(0.0));
  if (cfg.emit.count("csv")) {
    ColumnarBatch batch("traveling_wave", {"x", "w"});
    const std::size_t stride = std::max<std::size_t>(1, w.w.size() / 4000);
    for (std::size_t i = 0; i < w.w.size(); i += stride)
      batch.add_row({w.x_at(i), w.w[i]});
    batch.write_file(out_path(cfg, "wave.csv"));
  }
}

inline void task_extinction(const RunConfig& cfg, KvReport& kv) {
  const auto consts = solve_lambda_star(cfg.mechanism);
  const auto curve = solve_k(cfg.mechanism, consts, cfg.params.t_min, cfg.params.t_max,
                             cfg.params.rtol);
  const auto hyp = validate_hypotheses(cfg.mechanism);
  kv.add("k_at_1", curve.value(1.0));
  kv.add("nodes", static_cast<double>(curve.t_nodes.size()));
  if (hyp.h2_witness) {
    const auto rep = check_k_bounds(curve, *hyp.h2_witness);
    kv.add("c2_fitted", rep.c2);
    kv.add("bound_min_margin", rep.min_margin);
  }
  if (cfg.emit.count("csv")) {
    ColumnarBatch batch("k", {"t", "x", "value"});
    for (std::size_t i = 0; i < curve.t_nodes.size(); ++i)
      batch.add_row({curve.t_nodes[i], 0.0, curve.k_values[i]});
    batch.write_file(out_path(cfg, "k.csv"));
  }
}

inline void task_simulate_skeleton(const RunConfig& cfg, KvReport& kv) {
  const auto consts = solve_lambda_star(cfg.mechanism);
  SkeletonConfig scfg;
  scfg.consts = consts;
  scfg.offspring = offspring_distribution(cfg.mechanism, consts, cfg.params.n_max_offspring);
  scfg.alpha = cfg.mechanism.alpha;
  scfg.t_horizon = cfg.params.t_horizon;
  scfg.dt_path = 0.005 * cfg.params.t_horizon;
  const std::string mode = cfg.params.mode.empty() ? "max-cdf" : cfg.params.mode;
  if (mode == "max-cdf") {
    const auto est = estimate_max_cdf(scfg, cfg.params.x_level, cfg.params.n_samples, cfg.seed,
                                      cfg.workers);
    kv.add("p_hat", est.estimate.value);
    kv.add("std_error", est.estimate.std_error);
    kv.add("n_effective", static_cast<double>(est.estimate.n_samples));
    kv.add("excluded_capped", static_cast<double>(est.excluded_capped));
    kv.add("upper_envelope", max_cdf_upper_envelope(scfg, scfg.t_horizon, cfg.params.x_level));
    if (cfg.emit.count("csv")) {
      ColumnarBatch batch("skeleton_max_cdf", {"delta", "t", "n", "p_hat", "se"});
      const double delta =
          cfg.params.x_level / (std::sqrt(2.0 * cfg.mechanism.alpha) * scfg.t_horizon);
      batch.add_row({delta, scfg.t_horizon, static_cast<double>(est.estimate.n_samples),
                     est.estimate.value, est.estimate.std_error});
      batch.write_file(out_path(cfg, "skeleton_max_cdf.csv"));
    }
  } else if (mode == "tree-stats") {
    double pop_sum = 0.0, max_sum = 0.0;
    long long branched = 0;
    const long long n = cfg.params.n_samples;
    for (long long i = 0; i < n; ++i) {
      const auto obs = simulate_tree(scfg, cfg.seed, static_cast<std::uint64_t>(i));
      pop_sum += static_cast<double>(obs.population);
      max_sum += obs.max_position;
      if (std::isfinite(obs.first_branch_time)) ++branched;
    }
    kv.add("mean_population", pop_sum / static_cast<double>(n));
    kv.add("mean_max_position", max_sum / static_cast<double>(n));
    kv.add("branch_by_horizon_freq", static_cast<double>(branched) / static_cast<double>(n));
  } else if (mode == "conditional-tau") {
    const double x =
        std::sqrt(2.0 * cfg.mechanism.alpha) * cfg.params.delta * cfg.params.t_horizon;
    const double predicted = max_cdf_upper_envelope(scfg, scfg.t_horizon, x);
    const auto stats =
        conditional_tau_sample(scfg, cfg.params.delta, cfg.params.n_accepted_target, cfg.seed,
                               predicted, cfg.params.min_rate, cfg.workers);
    kv.add("acceptance_rate", stats.acceptance_rate);
    kv.add("mean_tau", stats.mean_tau);
    kv.add("median_t_minus_tau", stats.median_t_minus_tau);
    kv.add("censored_fraction", stats.censored_fraction);
    kv.add("window_fraction", stats.window_fraction);
    kv.add("q10", stats.quantile(0.1));
    kv.add("q50", stats.quantile(0.5));
    kv.add("q90", stats.quantile(0.9));
    if (cfg.emit.count("raw-samples")) {
      ColumnarBatch batch("conditional_tau", {"tau"});
      for (double t : stats.taus)
        batch.add_row({std::isfinite(t) ? t : -1.0});
      batch.write_file(out_path(cfg, "tau_samples.csv"));
    }
  } else {
    throw ValidationError("simulate-skeleton: unknown mode '" + mode + "'");
  }
}

inline void task_simulate_sbm(const RunConfig& cfg, KvReport& kv) {
  ParticleConfig pcfg;
  pcfg.mech = cfg.mechanism;
  pcfg.mass_scale = cfg.params.mass_scale;
  pcfg.t_horizon = cfg.params.t_horizon;
  const std::string mode = cfg.params.mode.empty() ? "sup-cdf" : cfg.params.mode;
  kv.add("rate", pcfg.rate());
  kv.add("p2", pcfg.p2());
  if (mode == "sup-cdf") {
    const auto est = estimate_sup_cdf(pcfg, cfg.params.x_level, cfg.params.n_samples, cfg.seed,
                                      cfg.workers);
    kv.add("p_hat", est.estimate.value);
    kv.add("std_error", est.estimate.std_error);
    kv.add("survival_rate", est.survival_rate);
    kv.add("p_hat_given_survival", est.conditional_survival.value);
    if (cfg.emit.count("csv")) {
      ColumnarBatch batch("sbm_sup_cdf", {"delta", "t", "n", "p_hat", "se"});
      const double delta =
          cfg.params.x_level / (std::sqrt(2.0 * cfg.mechanism.alpha) * pcfg.t_horizon);
      batch.add_row({delta, pcfg.t_horizon, static_cast<double>(est.estimate.n_samples),
                     est.estimate.value, est.estimate.std_error});
      batch.write_file(out_path(cfg, "sbm_sup_cdf.csv"));
    }
  } else if (mode == "extinction") {
    const auto est = extinction_frequency(pcfg, cfg.params.n_samples, cfg.seed, cfg.workers);
    kv.add("extinct_freq", est.value);
    kv.add("std_error", est.std_error);
    kv.add("exact_birth_death_value", extinction_prob_exact(pcfg));
    kv.add("limit_extinction_prob", std::exp(-solve_lambda_star(cfg.mechanism).lambda_star));
  } else if (mode == "mean-mass") {
    const auto est = mean_total_mass(pcfg, cfg.params.n_samples, cfg.seed, cfg.workers);
    kv.add("mean_mass", est.value);
    kv.add("std_error", est.std_error);
    kv.add("expected", std::exp(cfg.mechanism.alpha * pcfg.t_horizon));
  } else {
    throw ValidationError("simulate-sbm: unknown mode '" + mode + "'");
  }
}

inline void task_rates(const RunConfig& cfg, KvReport& kv) {
  const auto consts = solve_lambda_star(cfg.mechanism);
  const auto grid = cfg.params.delta_grid.empty()
                        ? std::vector<double>{-1.0, 1.0 - consts.rho, 0.5}
                        : cfg.params.delta_grid;
  ColumnarBatch batch("rates", {"delta", "regime", "rate", "poly_exponent", "a_delta"});
  for (double d : grid) {
    const auto cls = classify(consts, d);
    const double regime_code =
        cls.regime == Regime::shallow ? 1.0 : (cls.regime == Regime::critical ? 0.0 : -1.0);
    batch.add_row({d, regime_code, rate_of(consts, cfg.mechanism.alpha, cls),
                   poly_exponent_of(consts, cls), cls.a_delta});
    kv.add("rate_delta_" + std::to_string(d), rate_of(consts, cfg.mechanism.alpha, cls));
  }
  if (cfg.emit.count("csv")) batch.write_file(out_path(cfg, "rates.csv"));
}

inline void task_prefactor(const RunConfig& cfg, KvReport& kv) {
  const auto consts = solve_lambda_star(cfg.mechanism);
  const auto cls = classify(consts, cfg.params.delta);
  if (cls.regime != Regime::deep) {
    WaveOptions wopts;
    wopts.dx = cfg.params.wave_dx;
    const auto w = traveling_wave(cfg.mechanism, consts, wopts);
    const auto law = asymptotic_law_wave(consts, cls, w, cfg.mechanism);
    kv.add("rate", law.rate);
    kv.add("poly_exponent", law.poly_exponent);
    kv.add("prefactor", law.prefactor);
    for (const auto& [k, v] : law.breakdown) kv.add("breakdown." + k, v);
  } else {
    GridSpec g = cfg.params.grid.value_or([&] {
      GridSpec gg;
      gg.x_min = -60.0;
      gg.x_max = 15.0;
      gg.dx = 0.01;
      gg.dt = 0.005;
      gg.t_max = 16.0;
      return gg;
    }());
    CauchyOptions copts;
    copts.cap_multiple = std::max(cfg.params.cap_multiple, 1e6);
    for (double s = 1e-3; s < 0.2; s *= 1.5) copts.snapshot_times.push_back(s);
    for (double s = 0.2; s <= g.t_max; s += 0.1) copts.snapshot_times.push_back(s);
    const auto triple = compute_uv_triple(cfg.mechanism, consts, cfg.params.f, g, copts);
    const auto [ghat, gf] = g_fields(triple.u, triple.u_star, triple.v_direct, cfg.mechanism,
                                     consts);
    (void)ghat;
    DeepPrefactorDiagnostics diag;
    const auto law = asymptotic_law_deep(consts, cls, gf, cfg.mechanism, &diag);
    kv.add("rate", law.rate);
    kv.add("poly_exponent", law.poly_exponent);
    kv.add("prefactor_computed", law.prefactor_computed ? 1.0 : 0.0);
    if (law.prefactor_computed) kv.add("prefactor", law.prefactor);
    kv.add("s0_correction", diag.s0_correction);
    kv.add("s0_error_estimate", diag.s0_error_estimate);
    kv.add("tail_estimate", diag.tail_estimate);
    for (const auto& [k, v] : law.breakdown) kv.add("breakdown." + k, v);
  }
}

inline void task_trend(const RunConfig& cfg, KvReport& kv) {
  const auto consts = solve_lambda_star(cfg.mechanism);
  const auto cls = classify(consts, cfg.params.delta);
  const auto t_list =
      cfg.params.t_list.empty() ? std::vector<double>{10.0, 20.0, 30.0} : cfg.params.t_list;
  const double t_max = t_list.back();
  GridSpec g = cfg.params.grid.value_or([&] {
    GridSpec gg;
    if (cls.regime == Regime::shallow) {
      gg.x_min = -32.0;
      gg.x_max = 12.0;
      gg.moving_window = true;
    } else {
      gg.x_min = std::sqrt(2.0 * cfg.mechanism.alpha) * cls.delta * t_max - 18.0;
      gg.x_max = 15.0;
    }
    gg.dx = 0.01;
    gg.dt = 0.005;
    gg.t_max = t_max;
    return gg;
  }());
  CauchyOptions copts;
  copts.cap_multiple = cls.regime == Regime::deep ? std::max(cfg.params.cap_multiple, 1e6)
                                                  : cfg.params.cap_multiple;
  copts.snapshot_times = t_list;
  const auto triple = compute_uv_triple(cfg.mechanism, consts, cfg.params.f, g, copts);
  const auto trend = scaled_trend(consts, cls, triple.v_direct, t_list, cfg.mechanism.alpha);
  ColumnarBatch batch("scaled_trend", {"t", "y"});
  for (std::size_t i = 0; i < trend.t_used.size(); ++i) {
    batch.add_row({trend.t_used[i], trend.y[i]});
    kv.add("y_at_t_" + std::to_string(trend.t_used[i]), trend.y[i]);
  }
  kv.add("diffs_decreasing", trend.diffs_decreasing ? 1.0 : 0.0);
  kv.add("truncated", trend.truncated ? 1.0 : 0.0);
  if (cfg.emit.count("csv")) batch.write_file(out_path(cfg, "trend.csv"));
}

inline void task_inequality_suite(const RunConfig& cfg, KvReport& kv) {
  const auto consts = solve_lambda_star(cfg.mechanism);
  const auto rep = inequality_suite(consts, cfg.mechanism, cfg.params.n_random, cfg.seed);
  kv.add("rate_gap_draws", static_cast<double>(rep.rate_gap_draws));
  kv.add("rate_gap_min", rep.rate_gap_min);
  kv.add("rate_gap_at_minimizer", rep.rate_gap_at_minimizer);
  kv.add("gaussian_min_draws", static_cast<double>(rep.gaussian_min_draws));
  kv.add("gaussian_min_violation", rep.gaussian_min_violation);
  kv.add("ok", rep.ok ? 1.0 : 0.0);
}

inline bool task_full_report(const RunConfig& cfg, KvReport& kv) {
  AcceptanceOptions aopts;
  aopts.workers = cfg.workers;
  aopts.seed = cfg.seed;
  const auto results = run_acceptance(aopts);
  bool all_pass = true;
  for (const auto& r : results) {
    kv.add_group("criterion " + std::to_string(r.id) + ": " + r.title);
    kv.add("pass", r.pass ? 1.0 : 0.0);
    kv.add("detail", r.detail);
    if (!r.pass) all_pass = false;
  }
  kv.add_group("summary");
  kv.add("all_pass", all_pass ? 1.0 : 0.0);
  return all_pass;
}

}  // namespace run_detail

// Returns the process exit code: 0 success, 2 validation, 3 numerical
// failure, 4 acceptance failure.
inline int run_task(const RunConfig& cfg) {
  using namespace run_detail;
  ensure_dir(cfg.output_dir);
  write_manifest(cfg, "started");
  KvReport kv;
  try {
    bool acceptance_ok = true;
    if (cfg.task == "derive") task_derive(cfg, kv);
    else if (cfg.task == "solve-fkpp") task_solve_fkpp(cfg, kv);
    else if (cfg.task == "wave") task_wave(cfg, kv);
    else if (cfg.task == "extinction") task_extinction(cfg, kv);
    else if (cfg.task == "simulate-skeleton") task_simulate_skeleton(cfg, kv);
    else if (cfg.task == "simulate-sbm") task_simulate_sbm(cfg, kv);
    else if (cfg.task == "rates") task_rates(cfg, kv);
    else if (cfg.task == "prefactor") task_prefactor(cfg, kv);
    else if (cfg.task == "trend") task_trend(cfg, kv);
    else if (cfg.task == "inequality-suite") task_inequality_suite(cfg, kv);
    else if (cfg.task == "full-report") acceptance_ok = task_full_report(cfg, kv);
    else throw ValidationError("unknown task " + cfg.task);
    if (cfg.emit.count("kv")) kv.write_file(out_path(cfg, cfg.task + ".kv"));
    write_manifest(cfg, acceptance_ok ? "completed" : "completed-with-failures");
    return acceptance_ok ? 0 : 4;
  } catch (const ValidationError& e) {
    write_manifest(cfg, "failed-validation", e.what());
    throw;
  } catch (const NumericalError& e) {
    write_manifest(cfg, "failed-numerical", e.what());
    throw;
  }
}

}  // namespace sbmlab
