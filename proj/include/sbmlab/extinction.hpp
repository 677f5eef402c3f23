#pragma once

// Extinction rate k(t) = -log P*(X_t = 0) of the process conditioned on
// extinction: k'(t) = -psi(lambda* + k(t)), k(0+) = +infinity. Integrated by
// adaptive embedded Runge-Kutta from an asymptotic initializer near the
// blow-up, plus the bound checks that ride on k.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sbmlab/common.hpp"
#include "sbmlab/mechanism.hpp"

namespace sbmlab {

struct ExtinctionCurve {
  std::vector<double> t_nodes;
  std::vector<double> k_values;
  std::vector<double> k_derivs;  // exact right-hand sides at the nodes
  BranchingMechanism mech;
  DerivedConstants consts;

  // Cubic Hermite interpolation with the exact ODE slopes at the nodes.
  double value(double t) const {
    if (t <= t_nodes.front()) return k_values.front();
    if (t >= t_nodes.back()) return k_values.back();
    const auto it = std::upper_bound(t_nodes.begin(), t_nodes.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - t_nodes.begin()) - 1;
    const double h = t_nodes[i + 1] - t_nodes[i];
    const double s = (t - t_nodes[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double val = (2 * s3 - 3 * s2 + 1) * k_values[i] + (s3 - 2 * s2 + s) * h * k_derivs[i] +
                       (-2 * s3 + 3 * s2) * k_values[i + 1] + (s3 - s2) * h * k_derivs[i + 1];
    return std::max(val, 0.0);
  }
};

namespace detail {

// Asymptotic initializer near the blow-up. With beta > 0 the leading balance
// k' = -q k - beta k^2 has the closed form below (exact for quadratic psi);
// with a pure stable part the balance k' = -c k^{1+theta} gives a power law.
inline double k_initializer(const BranchingMechanism& mech, const DerivedConstants& c,
                            double t_min) {
  if (mech.beta > 0.0) {
    return c.q / (mech.beta * std::expm1(c.q * t_min));
  }
  if (const auto* s = std::get_if<LevyStable>(&mech.levy)) {
    return std::pow(s->scale * s->theta * t_min, -1.0 / s->theta);
  }
  throw ValidationError("solve_k: mechanism has no (H2) witness; k(t) is not available");
}

}  // namespace detail

// Integrate k on [t_min, t_max] with Cash-Karp 4(5) adaptive stepping. The
// state variable is log k, which keeps the error control relative across the
// exponential decay and enforces positivity for free.
inline ExtinctionCurve solve_k(const BranchingMechanism& mech, const DerivedConstants& c,
                               double t_min, double t_max, double rtol) {
  if (!(t_min > 0.0 && t_max > t_min)) throw ValidationError("solve_k: need 0 < t_min < t_max");
  if (!(rtol > 0.0 && rtol < 1e-1)) throw ValidationError("solve_k: rtol out of range");
  const double k0 = detail::k_initializer(mech, c, t_min);
  if (!(k0 < 1e12))
    throw NumericalError("solve_k: t_min too small for the asymptotic initializer; increase t_min");

  // y = log k, y' = -psi(lambda* + e^y) / e^y. Trial stages of rejected
  // steps can land at enormous y; saturating k keeps the right-hand side
  // finite so the controller can back off (accepted steps never get near
  // the clamp).
  auto rhs = [&](double y) {
    const double k = std::exp(std::clamp(y, -700.0, 18.0));
    return -eval_psi(mech, c.lambda_star + k) / k;
  };

  // Cash-Karp tableau.
  static constexpr double a2 = 1.0 / 5, a3 = 3.0 / 10, a4 = 3.0 / 5, a5 = 1.0, a6 = 7.0 / 8;
  static constexpr double b21 = 1.0 / 5;
  static constexpr double b31 = 3.0 / 40, b32 = 9.0 / 40;
  static constexpr double b41 = 3.0 / 10, b42 = -9.0 / 10, b43 = 6.0 / 5;
  static constexpr double b51 = -11.0 / 54, b52 = 5.0 / 2, b53 = -70.0 / 27, b54 = 35.0 / 27;
  static constexpr double b61 = 1631.0 / 55296, b62 = 175.0 / 512, b63 = 575.0 / 13824,
                          b64 = 44275.0 / 110592, b65 = 253.0 / 4096;
  static constexpr double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594, c6 = 512.0 / 1771;
  static constexpr double d1 = 2825.0 / 27648, d3 = 18575.0 / 48384, d4 = 13525.0 / 55296,
                          d5 = 277.0 / 14336, d6 = 1.0 / 4;
  (void)a2; (void)a3; (void)a4; (void)a5; (void)a6;

  ExtinctionCurve curve;
  curve.mech = mech;
  curve.consts = c;
  double t = t_min, y = std::log(k0);
  double h = std::min(1e-3, (t_max - t_min) / 16.0);
  auto push_node = [&]() {
    const double k = std::exp(y);
    curve.t_nodes.push_back(t);
    curve.k_values.push_back(k);
    curve.k_derivs.push_back(k * rhs(y));
  };
  push_node();

  int guard = 0;
  while (t < t_max) {
    if (++guard > 2000000) throw NumericalError("solve_k: step count exceeded");
    // Step caps keep the node spacing fine enough for the cubic Hermite
    // interpolation between nodes, not just for the integration error:
    // h/t governs the blow-up region (curvature ~ 1/t), h*q the tail.
    h = std::min({h, std::max(0.02 * t, 1e-5), 0.04 / std::max(c.q, 0.2), t_max - t});
    const double k1 = rhs(y);
    const double k2 = rhs(y + h * b21 * k1);
    const double k3 = rhs(y + h * (b31 * k1 + b32 * k2));
    const double k4 = rhs(y + h * (b41 * k1 + b42 * k2 + b43 * k3));
    const double k5 = rhs(y + h * (b51 * k1 + b52 * k2 + b53 * k3 + b54 * k4));
    const double k6 = rhs(y + h * (b61 * k1 + b62 * k2 + b63 * k3 + b64 * k4 + b65 * k5));
    const double y5th = y + h * (c1 * k1 + c3 * k3 + c4 * k4 + c6 * k6);
    const double y4th = y + h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6);
    const double scale = rtol * std::max(1.0, std::abs(y5th));
    const double err = std::abs(y5th - y4th);
    if (!std::isfinite(err)) {
      h *= 0.2;
      continue;
    }
    if (err <= scale || h <= 1e-12) {
      t += h;
      y = y5th;
      push_node();
    }
    const double factor = (err > 0.0) ? 0.9 * std::pow(scale / err, 0.2) : 4.0;
    h *= std::clamp(factor, 0.2, 4.0);
  }
  return curve;
}

struct KBoundReport {
  double c2 = 0.0;            // fitted largest constant with psi(l*+l) >= c2 (l + l^{1+vt})
  double min_margin = 0.0;    // min over nodes of bound - k
  double min_margin_rel = 0.0;
  bool ok = false;
};

// Verify the comparison bound on k with c2 fitted as the largest constant
// satisfying psi(lambda* + l) >= c2 (l + l^{1+vartheta}) on a lambda-grid.
// k' <= -c2 (k + k^{1+vt}) integrates exactly to
// k(t) <= (e^{c2 vt t} - 1)^{-1/vt}, which is the form asserted here; it
// agrees with the c2-in-the-numerator variant at c2 = 1 (the unit quadratic,
// where the bound reproduces k itself). The fitted c2 is a convention of
// this artifact and is reported, not asserted against anything external.
inline KBoundReport check_k_bounds(const ExtinctionCurve& curve, const H2Witness& witness,
                                   double rtol = 1e-9) {
  const double vt = witness.vartheta;
  double c2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 4000; ++i) {
    const double lam = std::pow(10.0, -6.0 + 14.0 * i / 4000.0);
    const double ratio = eval_psi(curve.mech, curve.consts.lambda_star + lam) /
                         (lam + std::pow(lam, 1.0 + vt));
    c2 = std::min(c2, ratio);
  }
  KBoundReport rep;
  rep.c2 = c2;
  rep.min_margin = std::numeric_limits<double>::infinity();
  rep.min_margin_rel = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curve.t_nodes.size(); ++i) {
    const double bound = std::pow(std::expm1(c2 * vt * curve.t_nodes[i]), -1.0 / vt);
    const double margin = bound - curve.k_values[i];
    rep.min_margin = std::min(rep.min_margin, margin);
    rep.min_margin_rel = std::min(rep.min_margin_rel, margin / std::max(bound, 1e-300));
  }
  rep.ok = rep.min_margin_rel >= -rtol;
  if (!rep.ok)
    throw NumericalError("check_k_bounds: comparison bound violated (margin " +
                         std::to_string(rep.min_margin_rel) + "); solver or witness bug");
  return rep;
}

// Integrability probe: int_0^A phi(k(s)) s^eps ds by composite Simpson on a
// geometrically refined mesh toward the singular endpoint.
inline double phi_k_integral(const ExtinctionCurve& curve, double A, double eps,
                             int levels = 48, int panels_per_level = 8) {
  const double t0 = curve.t_nodes.front();
  auto integrand = [&](double s) {
    const double ks = (s >= t0) ? curve.value(s)
                                : detail::k_initializer(curve.mech, curve.consts, s);
    return little_phi(curve.consts, curve.mech, ks) * std::pow(s, eps);
  };
  double total = 0.0;
  double right = A;
  for (int lev = 0; lev < levels; ++lev) {
    const double left = right * 0.5;
    const double h = (right - left) / panels_per_level;
    double acc = 0.0;
    for (int p = 0; p < panels_per_level; ++p) {
      const double a = left + p * h;
      acc += h / 6.0 * (integrand(a) + 4.0 * integrand(a + 0.5 * h) + integrand(a + h));
    }
    total += acc;
    right = left;
  }
  return total;
}

}  // namespace sbmlab
