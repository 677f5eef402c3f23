#pragma once

// The three-regime lower-deviation rate function, its polynomial corrections
// and prefactor constants, the scaled-trend diagnostics tying PDE output to
// the asymptotics, the limiting-measure Laplace ratio, and the standalone
// inequality property checks.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sbmlab/common.hpp"
#include "sbmlab/grid.hpp"
#include "sbmlab/mechanism.hpp"
#include "sbmlab/rng.hpp"
#include "sbmlab/wave.hpp"

namespace sbmlab {

enum class Regime { shallow, critical, deep };

struct RegimeClassification {
  double delta = 0.0;
  Regime regime = Regime::shallow;
  double a_delta = 0.0;  // 1 - (1 - delta)/rho, shallow only
};

// Boundaries at delta = 1 - rho with a tie tolerance; the critical theorem
// is a measure-zero case, so only exact-parameter entry triggers it.
inline RegimeClassification classify(const DerivedConstants& c, double delta,
                                     double tie_tol = 1e-9) {
  if (!(delta < 1.0))
    throw ValidationError("classify: delta >= 1 is the upper-deviation regime, out of scope");
  RegimeClassification out;
  out.delta = delta;
  const double boundary = 1.0 - c.rho;
  if (std::abs(delta - boundary) < tie_tol) {
    out.regime = Regime::critical;
  } else if (delta > boundary) {
    out.regime = Regime::shallow;
    out.a_delta = 1.0 - (1.0 - delta) / c.rho;
  } else {
    out.regime = Regime::deep;
  }
  return out;
}

inline double rate_of(const DerivedConstants& c, double alpha, const RegimeClassification& cls) {
  switch (cls.regime) {
    case Regime::shallow: return 2.0 * alpha * (c.rho - 1.0) * (1.0 - cls.delta);
    case Regime::critical: return c.q + alpha * sq(c.rho - 1.0);
    case Regime::deep: return c.q + alpha * sq(cls.delta);
  }
  return 0.0;
}

inline double poly_exponent_of(const DerivedConstants& c, const RegimeClassification& cls) {
  switch (cls.regime) {
    case Regime::shallow: return 1.5 * (c.rho - 1.0);
    case Regime::critical: return 0.75 * (c.rho - 1.0);
    case Regime::deep: return -0.5;
  }
  return 0.0;
}

struct AsymptoticLaw {
  double rate = 0.0;
  double poly_exponent = 0.0;
  double prefactor = 0.0;  // theorem constant, survival factor included
  bool prefactor_computed = false;
  std::map<std::string, double> breakdown;
};

struct ZIntegral {
  double value = 0.0;  // bulk + both tails
  double bulk = 0.0;
  double tail_left = 0.0;
  double tail_right = 0.0;
};

// int e^{-sqrt(2 alpha)(rho - 1) z} A(w(z)) dz over a tabulated profile with
// analytic tail corrections: the integrand decays at rate mu to the right
// (A -> A(0) = q) and at 2*(left decay) - mu to the left (A has a double
// zero at lambda*).
inline ZIntegral z_integral_of_wave(const TravelingWave& wave, const BranchingMechanism& mech,
                                    const DerivedConstants& c,
                                    double z_lo = -std::numeric_limits<double>::infinity(),
                                    double z_hi = std::numeric_limits<double>::infinity()) {
  const double mu = std::sqrt(2.0 * mech.alpha) * (c.rho - 1.0);
  const double lo = std::max(z_lo, wave.x0);
  const double hi = std::min(z_hi, wave.x_back());
  const std::size_t i0 = static_cast<std::size_t>(std::ceil((lo - wave.x0) / wave.dx - 1e-9));
  const std::size_t i1 = static_cast<std::size_t>(std::floor((hi - wave.x0) / wave.dx + 1e-9));
  if (i1 <= i0 + 8) throw ValidationError("z_integral: window too narrow");
  auto f = [&](std::size_t i) {
    return std::exp(-mu * wave.x_at(i)) * std::max(big_a(c, mech, std::max(wave.w[i], 0.0)), 0.0);
  };
  ZIntegral out;
  // composite Simpson over the table, trapezoid for a leftover cell
  std::size_t i = i0;
  for (; i + 2 <= i1; i += 2) out.bulk += wave.dx / 3.0 * (f(i) + 4.0 * f(i + 1) + f(i + 2));
  if (i + 1 <= i1) out.bulk += 0.5 * wave.dx * (f(i) + f(i + 1));

  out.tail_right = f(i1) / mu;
  // Left tail: extrapolate with the locally fitted decay rate of the
  // integrand itself, falling back to the linearized 2 mu_left - mu.
  const std::size_t span = std::max<std::size_t>(4, static_cast<std::size_t>(1.0 / wave.dx));
  double nu = 0.0;
  if (i0 + span <= i1 && f(i0) > 0.0 && f(i0 + span) > f(i0)) {
    nu = std::log(f(i0 + span) / f(i0)) / (span * wave.dx);
  } else if (wave.decay_rate_left > 0.55 * mu) {
    nu = 2.0 * wave.decay_rate_left - mu;
  }
  if (nu > 0.05 * mu) out.tail_left = f(i0) / nu;
  out.value = out.bulk + out.tail_left + out.tail_right;
  return out;
}

// Critical-regime s-integral int_0^inf s^p e^{-c s^2} ds, both routes.
inline double critical_s_integral_gamma(double p, double cc) {
  return 0.5 * std::tgamma(0.5 * (p + 1.0)) * std::pow(cc, -0.5 * (p + 1.0));
}

inline double critical_s_integral_quadrature(double p, double cc) {
  auto f = [&](double s) { return std::pow(s, p) * std::exp(-cc * s * s); };
  // panel seeding keeps the adaptive rule from stepping over the bump
  const double s_peak = std::sqrt(0.5 * std::max(p, 0.5) / cc);
  const double s_max = std::sqrt(42.0 / cc);
  const double scale = f(s_peak) * s_peak;
  double total = 0.0;
  double a = 0.0;
  for (double b : {0.25 * s_peak, s_peak, 3.0 * s_peak, s_max}) {
    if (b <= a) continue;
    total += adaptive_simpson(f, a, b, 1e-12 * scale);
    a = b;
  }
  return total;
}

// Shallow / critical prefactors from a traveling wave.
inline AsymptoticLaw asymptotic_law_wave(const DerivedConstants& c,
                                         const RegimeClassification& cls,
                                         const TravelingWave& wave,
                                         const BranchingMechanism& mech) {
  if (cls.regime == Regime::deep)
    throw ValidationError("asymptotic_law_wave: deep regime needs the G field");
  AsymptoticLaw law;
  law.rate = rate_of(c, mech.alpha, cls);
  law.poly_exponent = poly_exponent_of(c, cls);
  const auto zi = z_integral_of_wave(wave, mech, c);
  const double speed = std::sqrt(2.0 * mech.alpha);
  double geom = 0.0;
  if (cls.regime == Regime::shallow) {
    // a_delta^{3(rho-1)/2} / (sqrt(2 alpha) rho); the exponent coincides
    // with the polynomial correction.
    geom = std::pow(cls.a_delta, law.poly_exponent) / (speed * c.rho);
  } else {
    const double p = 1.5 * (c.rho - 1.0);
    const double s_int = critical_s_integral_gamma(p, mech.alpha * sq(c.rho));
    geom = s_int / std::sqrt(2.0 * kPi);
    law.breakdown["s_integral"] = s_int;
  }
  law.prefactor = c.survival_factor * geom * zi.value;
  law.prefactor_computed = true;
  law.breakdown["survival_factor"] = c.survival_factor;
  law.breakdown["geometric_factor"] = geom;
  law.breakdown["z_integral"] = zi.value;
  law.breakdown["z_tail_left"] = zi.tail_left;
  law.breakdown["z_tail_right"] = zi.tail_right;
  if (!(law.prefactor > 0.0) || !std::isfinite(law.prefactor))
    throw NumericalError("asymptotic_law: nonpositive or nonfinite prefactor");
  return law;
}

struct DeepPrefactorDiagnostics {
  double s_integral = 0.0;
  double s0_correction = 0.0;
  double s0_error_estimate = 0.0;
  double tail_estimate = 0.0;
  bool tail_converged = false;
};

// Deep-regime prefactor: survival * [ 1/(2 sqrt(pi alpha) |delta|)
//   + (2 pi)^{-1/2} int_0^inf e^{(q - alpha delta^2) s} ds
//                     int e^{sqrt(2 alpha) delta z} G(s, z) dz ].
// The s -> 0 piece below the first snapshot scales like s^{-1/2} and is
// extrapolated, reported as an explicit error estimate; the s tail must
// pass its convergence heuristic or the prefactor is marked not-computed.
inline AsymptoticLaw asymptotic_law_deep(const DerivedConstants& c,
                                         const RegimeClassification& cls,
                                         const SpaceTimeField& g_field,
                                         const BranchingMechanism& mech,
                                         DeepPrefactorDiagnostics* diag_out = nullptr) {
  if (cls.regime != Regime::deep)
    throw ValidationError("asymptotic_law_deep: not a deep-regime classification");
  AsymptoticLaw law;
  law.rate = rate_of(c, mech.alpha, cls);
  law.poly_exponent = poly_exponent_of(c, cls);
  const double delta = cls.delta;
  const double speed = std::sqrt(2.0 * mech.alpha);

  std::vector<double> s_nodes, inner;
  for (std::size_t snap = 0; snap < g_field.times.size(); ++snap) {
    const double s = g_field.times[snap];
    if (s <= 0.0) continue;
    const auto& row = g_field.values[snap];
    // The integrand peaks near z = sqrt(2 alpha) delta s with Gaussian
    // width sqrt(s). The window cuts the weighted far tail, where the flat
    // finite-cap probability floor would otherwise be amplified by the
    // exponential weight into pure artifact.
    const double z_lo = speed * delta * s - 4.5 * std::sqrt(s) - 1.0;
    const double z_hi = 12.0;
    if (z_lo < g_field.x_left(snap))
      throw ValidationError("asymptotic_law_deep: grid window too narrow at s = " +
                            std::to_string(s));
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < row.size(); ++i) {
      const double z0 = g_field.x_at(snap, i), z1 = g_field.x_at(snap, i + 1);
      if (z1 < z_lo || z0 > z_hi) continue;
      acc += 0.5 * (z1 - z0) *
             (std::exp(speed * delta * z0) * row[i] + std::exp(speed * delta * z1) * row[i + 1]);
    }
    s_nodes.push_back(s);
    inner.push_back(std::exp((c.q - mech.alpha * delta * delta) * s) * acc);
  }
  if (s_nodes.size() < 8)
    throw ValidationError("asymptotic_law_deep: too few G snapshots");

  DeepPrefactorDiagnostics diag;
  for (std::size_t i = 0; i + 1 < s_nodes.size(); ++i)
    diag.s_integral += 0.5 * (s_nodes[i + 1] - s_nodes[i]) * (inner[i] + inner[i + 1]);
  // s -> 0: integrand ~ C s^{-1/2}
  const double c0 = inner[0] * std::sqrt(s_nodes[0]);
  const double c1 = inner[1] * std::sqrt(s_nodes[1]);
  diag.s0_correction = 2.0 * c0 * std::sqrt(s_nodes[0]);
  diag.s0_error_estimate = 2.0 * std::abs(c1 - c0) * std::sqrt(s_nodes[0]) + diag.s0_correction;
  // tail: fit exponential decay over the last stretch
  const std::size_t m = s_nodes.size();
  const double a_end = std::abs(inner[m - 1]), a_mid = std::abs(inner[(3 * m) / 4]);
  if (a_end > 0.0 && a_mid > a_end) {
    const double kappa = std::log(a_mid / a_end) / (s_nodes[m - 1] - s_nodes[(3 * m) / 4]);
    diag.tail_estimate = a_end / kappa;
    diag.tail_converged = true;
  }
  const double scale = std::abs(diag.s_integral) + 1e-12;
  if (!diag.tail_converged || diag.tail_estimate > 0.05 * scale) {
    law.prefactor_computed = false;
    if (diag_out) *diag_out = diag;
    return law;
  }
  const double s_total = diag.s_integral + diag.s0_correction;
  const double v_prefactor =
      1.0 / (2.0 * std::sqrt(kPi * mech.alpha) * std::abs(delta)) + s_total / std::sqrt(2.0 * kPi);
  law.prefactor = c.survival_factor * v_prefactor;
  law.prefactor_computed = true;
  law.breakdown["survival_factor"] = c.survival_factor;
  law.breakdown["u1_term"] = 1.0 / (2.0 * std::sqrt(kPi * mech.alpha) * std::abs(delta));
  law.breakdown["s_integral"] = s_total;
  law.breakdown["s0_correction"] = diag.s0_correction;
  law.breakdown["s0_error_estimate"] = diag.s0_error_estimate;
  law.breakdown["tail_estimate"] = diag.tail_estimate;
  if (diag_out) *diag_out = diag;
  if (!(law.prefactor > 0.0) || !std::isfinite(law.prefactor))
    throw NumericalError("asymptotic_law: nonpositive or nonfinite deep prefactor");
  return law;
}

struct ScaledTrend {
  std::vector<double> t_used;
  std::vector<double> y;             // log v + rate t - poly log t
  std::vector<double> diffs;         // |y_{i+1} - y_i|
  bool diffs_decreasing = false;
  bool truncated = false;            // v underflowed the grid floor
};

// y(t) = log v(t, sqrt(2 alpha) delta t) + rate t - poly log t; converges to
// log(prefactor / survival_factor) since v excludes the survival
// normalization.
inline ScaledTrend scaled_trend(const DerivedConstants& c, const RegimeClassification& cls,
                                const SpaceTimeField& v_field, const std::vector<double>& t_list,
                                double alpha) {
  ScaledTrend out;
  const double rate = rate_of(c, alpha, cls);
  const double poly = poly_exponent_of(c, cls);
  const double speed = std::sqrt(2.0 * alpha);
  for (double t : t_list) {
    const std::size_t snap = v_field.snapshot_index(t);
    const double x = speed * cls.delta * t;
    if (x < v_field.x_left(snap) || x > v_field.x_right(snap))
      throw ValidationError("scaled_trend: probe exits the solved window at t = " +
                            std::to_string(t));
    const double v = v_field.sample_at_snapshot(snap, x);
    if (v < 1e-290) {
      out.truncated = true;
      break;
    }
    out.t_used.push_back(t);
    out.y.push_back(std::log(v) + rate * t - poly * std::log(t));
  }
  for (std::size_t i = 0; i + 1 < out.y.size(); ++i)
    out.diffs.push_back(std::abs(out.y[i + 1] - out.y[i]));
  out.diffs_decreasing = true;
  for (std::size_t i = 0; i + 1 < out.diffs.size(); ++i)
    if (out.diffs[i + 1] >= out.diffs[i]) out.diffs_decreasing = false;
  return out;
}

// Laplace-functional ratio of the limiting measure (shallow/critical): both
// profiles must come from the same frame (same probe time and grid), so the
// relative translate between them carries the f-dependence.
inline double limit_measure_ratio(const DerivedConstants& c, const TravelingWave& wave_f,
                                  const TravelingWave& wave_0, const BranchingMechanism& mech,
                                  const RegimeClassification& cls) {
  if (cls.regime == Regime::deep)
    throw ValidationError("limit_measure_ratio: shallow/critical regimes only");
  if (wave_f.crossing < wave_0.crossing - 10.0 * wave_0.dx)
    throw NumericalError("limit_measure_ratio: translate mismatch (f-wave crossing left of base)");
  const double lo = std::max(wave_f.x0, wave_0.x0);
  const double hi = std::min(wave_f.x_back(), wave_0.x_back());
  const auto num = z_integral_of_wave(wave_f, mech, c, lo, hi);
  const auto den = z_integral_of_wave(wave_0, mech, c, lo, hi);
  const double ratio = num.value / den.value;
  if (!(ratio > 0.0) || ratio > 1.0 + 1e-9)
    throw NumericalError("limit_measure_ratio: ratio " + std::to_string(ratio) +
                         " outside (0, 1]");
  return std::min(ratio, 1.0);
}

struct InequalityReport {
  long long rate_gap_draws = 0;
  double rate_gap_min = 0.0;           // min LHS - RHS, must be >= -1e-12
  double rate_gap_at_minimizer = 0.0;  // |LHS - RHS| at the completed-square minimizer
  long long gaussian_min_draws = 0;
  double gaussian_min_violation = 0.0; // max LHS - RHS, must be <= 1e-10
  bool ok = false;
};

// E( e^{-b1 (b2 + B_1)} AND 1 ) by direct quadrature of the Gaussian integral.
inline double gaussian_min_expectation(double b1, double b2) {
  auto phi = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); };
  const double lo = -b2;
  const double hi = lo + std::max(60.0 / b1, 12.0);
  auto f = [&](double z) { return std::exp(-b1 * (b2 + z)) * phi(z); };
  return norm_cdf(-b2) + adaptive_simpson(f, lo, std::min(hi, 40.0), 1e-15);
}

inline InequalityReport inequality_suite(const DerivedConstants& c,
                                         const BranchingMechanism& mech, long long n_random,
                                         std::uint64_t seed) {
  InequalityReport rep;
  const double alpha = mech.alpha, q = c.q, rho = c.rho;
  RngStream rng(seed, 0);
  rep.rate_gap_min = std::numeric_limits<double>::infinity();
  for (long long i = 0; i < n_random; ++i) {
    const double x = rng.next_uniform();
    const double cc = -5.0 + 7.0 * rng.next_uniform();
    const double lhs = q * (1.0 - x) + alpha * sq(x - cc) / (1.0 - x);
    const double rhs = 2.0 * alpha * (rho - 1.0) * (1.0 - cc) +
                       alpha * rho * rho * sq(1.0 - (1.0 - cc) / rho - x);
    rep.rate_gap_min = std::min(rep.rate_gap_min, lhs - rhs);
  }
  rep.rate_gap_draws = n_random;
  {
    // completed square vanishes at x = 1 - (1 - c)/rho
    const double cc = 0.3;
    const double x = 1.0 - (1.0 - cc) / rho;
    const double lhs = q * (1.0 - x) + alpha * sq(x - cc) / (1.0 - x);
    const double rhs = 2.0 * alpha * (rho - 1.0) * (1.0 - cc);
    rep.rate_gap_at_minimizer = std::abs(lhs - rhs);
  }
  RngStream rng2(seed, 1);
  rep.gaussian_min_violation = -std::numeric_limits<double>::infinity();
  for (long long i = 0; i < n_random; ++i) {
    const double b2 = 0.05 + 5.95 * rng2.next_uniform();
    const double b1 = b2 + 0.05 + 5.95 * rng2.next_uniform();
    const double lhs = gaussian_min_expectation(b1, b2);
    const double rhs =
        (1.0 / (b1 - b2) + 1.0 / b2) * std::exp(-0.5 * b2 * b2) / std::sqrt(2.0 * kPi);
    rep.gaussian_min_violation = std::max(rep.gaussian_min_violation, lhs - rhs);
  }
  rep.gaussian_min_draws = n_random;
  rep.ok = rep.rate_gap_min >= -1e-12 && rep.gaussian_min_violation <= 1e-10;
  if (!rep.ok)
    throw NumericalError("inequality_suite: a theorem-level inequality failed; implementation bug");
  return rep;
}

// Empirical constant of the lemma bound v(t, m_t - z) <= c e^{-(mu - eps) z}.
inline double front_tail_constant(const SpaceTimeField& v_field, const DerivedConstants& c,
                                   const BranchingMechanism& mech, double t, double eps,
                                   double z_max) {
  const std::size_t snap = v_field.snapshot_index(t);
  const double mt = m_center(c, mech, t);
  const double mu = std::sqrt(2.0 * mech.alpha) * (c.rho - 1.0);
  double worst = 0.0;
  for (double z = 0.0; z <= z_max; z += v_field.grid.dx) {
    const double x = mt - z;
    if (x < v_field.x_left(snap)) break;
    const double v = v_field.sample_at_snapshot(snap, x);
    worst = std::max(worst, v * std::exp((mu - eps) * z));
  }
  return worst;
}

}  // namespace sbmlab
