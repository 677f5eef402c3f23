#pragma once

// Traveling wave of the front equation: (1/2) w'' + sqrt(2 alpha) w' - psi(w) = 0
// connecting lambda* (left) to 0 (right), solved by finite-difference Newton
// on a fixed grid and re-centered so that w(0) = lambda*/2. Also the
// extraction of wave profiles from solved u-fields along the centering m(t).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sbmlab/common.hpp"
#include "sbmlab/grid.hpp"
#include "sbmlab/mechanism.hpp"

namespace sbmlab {

// Bramson-type centering of the front.
inline double m_center(const DerivedConstants&, const BranchingMechanism& mech, double t) {
  const double s = std::sqrt(2.0 * mech.alpha);
  return s * t - 1.5 / s * std::log(t);
}

struct TravelingWave {
  double x0 = 0.0;  // coordinate of w[0]
  double dx = 0.0;
  std::vector<double> w;
  double lambda_left = 0.0;       // plateau value (lambda*)
  double decay_rate_left = 0.0;   // fitted approach rate to lambda*
  double decay_rate_right = 0.0;  // fitted front decay exponent
  double tail_amp_left = 0.0;     // lambda* - w ~ amp * e^{rate * x} toward -inf
  double residual_max = 0.0;      // ODE residual on a fourth-order stencil
  double crossing = 0.0;          // x with w = lambda_left / 2 (0 after normalization)
  bool extracted = false;         // true when read off a finite-t field

  double x_at(std::size_t i) const { return x0 + static_cast<double>(i) * dx; }
  double x_back() const { return x0 + static_cast<double>(w.size() - 1) * dx; }

  double sample(double x) const {
    const double pos = (x - x0) / dx;
    if (pos <= 0.0) return w.front();
    if (pos >= static_cast<double>(w.size() - 1)) return w.back();
    const std::size_t i = static_cast<std::size_t>(pos);
    const double s = pos - static_cast<double>(i);
    return (1.0 - s) * w[i] + s * w[i + 1];
  }

  // Unique level crossing of a decreasing profile.
  double find_crossing(double level) const {
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      if ((w[i] - level) * (w[i + 1] - level) <= 0.0 && w[i] != w[i + 1]) {
        const double s = (w[i] - level) / (w[i] - w[i + 1]);
        return x_at(i) + s * dx;
      }
    }
    throw NumericalError("wave: level " + std::to_string(level) + " not crossed");
  }
};

struct WaveOptions {
  double dx = 5e-4;
  double tol = 1e-6;         // residual target, relative to the scale q lambda*
  double left_decay = 15.2;  // target exponent mu_left * L_left at the ends
  double right_decay = 16.0;
  int max_newton = 60;
};

namespace detail {

// Least-squares slope of log(y) over index window [i0, i1].
inline std::pair<double, double> log_slope_fit(const std::vector<double>& xs,
                                               const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ly = std::log(ys[i]);
    sx += xs[i];
    sy += ly;
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ly;
  }
  const double d = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / d;
  const double intercept = (sy - slope * sx) / n;
  return {slope, std::exp(intercept)};
}

inline void fit_left_tail(TravelingWave& tw) {
  // Fit lambda* - w on the window where it sits between 1e-3 and 1e-2 of
  // lambda*: deep enough to be linearized, far from the boundary pinch.
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < tw.w.size(); ++i) {
    const double h = tw.lambda_left - tw.w[i];
    const double rel = h / tw.lambda_left;
    if (rel >= 1e-3 && rel <= 1e-2) {
      xs.push_back(tw.x_at(i));
      ys.push_back(h);
    }
    if (rel > 2e-2) break;
  }
  if (xs.size() < 8) {
    tw.decay_rate_left = 0.0;
    tw.tail_amp_left = 0.0;
    return;
  }
  auto [slope, amp] = log_slope_fit(xs, ys);
  tw.decay_rate_left = slope;
  tw.tail_amp_left = amp;
}

inline void fit_right_tail(TravelingWave& tw) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < tw.w.size(); ++i) {
    const double rel = tw.w[i] / tw.lambda_left;
    if (rel <= 1e-3 && rel >= 1e-5) {
      xs.push_back(tw.x_at(i));
      ys.push_back(tw.w[i]);
    }
  }
  if (xs.size() < 8) {
    tw.decay_rate_right = 0.0;
    return;
  }
  tw.decay_rate_right = -log_slope_fit(xs, ys).first;
}

}  // namespace detail

// Fourth-order-stencil ODE residual, reported over interior nodes.
inline double wave_residual_max(const TravelingWave& tw, const BranchingMechanism& mech) {
  const double s = std::sqrt(2.0 * mech.alpha);
  const double dx = tw.dx;
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < tw.w.size(); ++i) {
    const double wxx = (-tw.w[i - 2] + 16 * tw.w[i - 1] - 30 * tw.w[i] + 16 * tw.w[i + 1] -
                        tw.w[i + 2]) /
                       (12 * dx * dx);
    const double wx = (tw.w[i - 2] - 8 * tw.w[i - 1] + 8 * tw.w[i + 1] - tw.w[i + 2]) / (12 * dx);
    const double r = 0.5 * wxx + s * wx - eval_psi(mech, std::max(tw.w[i], 0.0));
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

// Solve the boundary-value problem on [-L_left, L_right] with Dirichlet data
// (lambda*, 0); Newton on the second-order collocation equations, then
// re-center at the lambda*/2 crossing.
inline TravelingWave traveling_wave(const BranchingMechanism& mech, const DerivedConstants& c,
                                    const WaveOptions& opts = {}) {
  const double speed = std::sqrt(2.0 * mech.alpha);
  const double mu_left = speed * (c.rho - 1.0);
  // Domain sized so the analytic tails reach e^{-left_decay}, e^{-right_decay}.
  const double L_left = opts.left_decay / mu_left;
  const double L_right = opts.right_decay / speed;
  const double dx = opts.dx;
  const std::size_t n = static_cast<std::size_t>(std::lround((L_left + L_right) / dx)) + 1;

  TravelingWave tw;
  tw.x0 = -L_left;
  tw.dx = dx;
  tw.lambda_left = c.lambda_star;
  tw.w.resize(n);
  const double slope = 0.5 * (mu_left + speed);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = tw.x_at(i);
    tw.w[i] = c.lambda_star / (1.0 + std::exp(slope * x));
  }
  tw.w.front() = c.lambda_star;
  tw.w.back() = 0.0;

  std::vector<double> resid(n, 0.0), diag(n), sub(n), sup(n), cw(n), dw(n);
  const double inv2 = 1.0 / (2.0 * dx * dx);
  const double adv = speed / (2.0 * dx);

  // The critical front decays like (x - x_c) e^{-speed x}; a hard zero at
  // the right end would pin a steeper, wrong profile. The last node carries
  // the tail's Robin condition w' = g w with g = -speed + 1/(R - x_c),
  // eliminated through a ghost node so the system stays tridiagonal. x_c is
  // refined by outer iterations.
  double x_c = 0.0;
  const double xR = tw.x_at(n - 1);
  auto robin_g = [&]() { return -speed + 1.0 / (xR - x_c); };
  auto residual_norm = [&](const std::vector<double>& w) {
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double r = inv2 * (w[i - 1] - 2.0 * w[i] + w[i + 1]) + adv * (w[i + 1] - w[i - 1]) -
                       eval_psi(mech, std::max(w[i], 0.0));
      resid[i] = r;
      worst = std::max(worst, std::abs(r));
    }
    const double g = robin_g();
    const std::size_t e = n - 1;
    resid[e] = 2.0 * inv2 * (w[e - 1] - w[e] + dx * g * w[e]) + speed * g * w[e] -
               eval_psi(mech, std::max(w[e], 0.0));
    worst = std::max(worst, std::abs(resid[e]));
    return worst;
  };

  // Pseudo-time warm start: the parabolic flow attracts to the wave, which
  // puts Newton safely inside its basin. Semi-implicit steps, linear part
  // implicit, reaction explicit.
  {
    const double pdt = 0.25 * dx / speed * 10.0;
    const double a_im = pdt * inv2 - pdt * adv;   // w_{i-1} coefficient
    const double c_im = pdt * inv2 + pdt * adv;   // w_{i+1} coefficient
    const double d_im = 1.0 + 2.0 * pdt * inv2;
    std::vector<double> rhs(n);
    for (int step = 0; step < 400; ++step) {
      for (std::size_t i = 1; i + 1 < n; ++i)
        rhs[i] = tw.w[i] - pdt * eval_psi(mech, std::max(tw.w[i], 0.0));
      rhs[1] += a_im * tw.w[0];
      rhs[n - 2] += c_im * tw.w[n - 1];
      cw[1] = -c_im / d_im;
      dw[1] = rhs[1] / d_im;
      for (std::size_t i = 2; i + 1 < n; ++i) {
        const double m = d_im + a_im * cw[i - 1];
        cw[i] = -c_im / m;
        dw[i] = (rhs[i] + a_im * dw[i - 1]) / m;
      }
      tw.w[n - 2] = dw[n - 2];
      for (std::size_t i = n - 3; i >= 1; --i) {
        tw.w[i] = dw[i] - cw[i] * tw.w[i + 1];
        if (i == 1) break;
      }
    }
  }

  auto newton_solve = [&]() {
    double best = residual_norm(tw.w);
    const double target = 1e-12 * std::max(1.0, c.q * c.lambda_star);
    for (int iter = 0; iter < opts.max_newton; ++iter) {
      if (best < target) break;
      const double g = robin_g();
      for (std::size_t i = 1; i + 1 < n; ++i) {
        sub[i] = inv2 - adv;
        diag[i] = -2.0 * inv2 - eval_psi(mech, std::max(tw.w[i], 0.0), 1);
        sup[i] = inv2 + adv;
      }
      const std::size_t e = n - 1;
      sub[e] = 2.0 * inv2;
      diag[e] = 2.0 * inv2 * (dx * g - 1.0) + speed * g - eval_psi(mech, std::max(tw.w[e], 0.0), 1);
      // Thomas solve of J * dw = -resid on nodes 1..n-1.
      cw[1] = sup[1] / diag[1];
      dw[1] = -resid[1] / diag[1];
      for (std::size_t i = 2; i <= e; ++i) {
        const double m = diag[i] - sub[i] * cw[i - 1];
        cw[i] = (i < e) ? sup[i] / m : 0.0;
        dw[i] = (-resid[i] - sub[i] * dw[i - 1]) / m;
      }
      for (std::size_t i = e - 1; i >= 1; --i) {
        dw[i] -= cw[i] * dw[i + 1];
        if (i == 1) break;
      }
      double scale = 1.0;
      bool improved = false;
      for (int half = 0; half < 30 && !improved; ++half) {
        std::vector<double> trial = tw.w;
        bool sane = true;
        for (std::size_t i = 1; i <= e; ++i) {
          trial[i] += scale * dw[i];
          if (!(trial[i] > -0.2 * c.lambda_star && trial[i] < 1.5 * c.lambda_star)) sane = false;
        }
        const double r = sane ? residual_norm(trial) : std::numeric_limits<double>::infinity();
        if (r < best) {
          tw.w.swap(trial);
          best = r;
          improved = true;
        }
        scale *= 0.5;
      }
      if (!improved) break;  // at the attainable floor
    }
    return best;
  };

  double best = 0.0;
  for (int outer = 0; outer < 4; ++outer) {
    best = newton_solve();
    // Refresh the tail's virtual origin from the computed solution.
    const std::size_t ia = n - 1 - static_cast<std::size_t>(std::lround(3.0 / dx));
    const double la =
        (tw.w[ia + 1] - tw.w[ia - 1]) / (2.0 * dx * std::max(tw.w[ia], 1e-300));
    const double denom = la + speed;
    if (!(denom > 1e-6)) break;
    const double x_c_new = tw.x_at(ia) - 1.0 / denom;
    if (std::abs(x_c_new - x_c) < 1e-10) {
      x_c = x_c_new;
      break;
    }
    x_c = x_c_new;
  }
  best = newton_solve();
  if (best > 1e-9 * std::max(1.0, c.q * c.lambda_star))
    throw NumericalError("traveling_wave: nonconvergence, final residual " + std::to_string(best));

  for (std::size_t i = 1; i < n; ++i) tw.w[i] = std::clamp(tw.w[i], 0.0, c.lambda_star);

  // Pin the translate: shift coordinates so the lambda*/2 crossing is at 0.
  const double xc = tw.find_crossing(0.5 * c.lambda_star);
  tw.x0 -= xc;
  tw.crossing = 0.0;
  detail::fit_left_tail(tw);
  detail::fit_right_tail(tw);
  tw.residual_max = wave_residual_max(tw, mech);
  if (tw.residual_max > opts.tol * std::max(1.0, c.q * c.lambda_star))
    throw NumericalError("traveling_wave: residual " + std::to_string(tw.residual_max) +
                         " above tol; refine dx");
  return tw;
}

// Read u(t_probe, m(t_probe) + z) off a solved field for z in [z_lo, z_hi].
inline TravelingWave extract_wave_limit(const SpaceTimeField& u_field,
                                        const DerivedConstants& consts,
                                        const BranchingMechanism& mech, double t_probe,
                                        double z_lo, double z_hi) {
  const std::size_t snap = u_field.snapshot_index(t_probe);
  const double m = m_center(consts, mech, t_probe);
  if (m + z_lo < u_field.x_left(snap) || m + z_hi > u_field.x_right(snap))
    throw ValidationError("extract_wave_limit: window exits the solved grid");
  TravelingWave tw;
  tw.extracted = true;
  tw.dx = u_field.grid.dx;
  tw.x0 = z_lo;
  tw.lambda_left = consts.lambda_star;
  const std::size_t count = static_cast<std::size_t>(std::floor((z_hi - z_lo) / tw.dx)) + 1;
  tw.w.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    tw.w[i] = u_field.sample_at_snapshot(snap, m + z_lo + i * tw.dx);
  tw.crossing = tw.find_crossing(0.5 * consts.lambda_star);
  detail::fit_left_tail(tw);
  detail::fit_right_tail(tw);
  return tw;
}

// Sup-norm distance between an extracted profile and a reference wave after
// matching translates at the lambda*/2 crossing.
inline double wave_sup_distance(const TravelingWave& extracted, const TravelingWave& reference,
                                double z_lo, double z_hi, double dz = 0.01) {
  const double shift = extracted.crossing - reference.crossing;
  double worst = 0.0;
  for (double z = z_lo; z <= z_hi + 1e-12; z += dz)
    worst = std::max(worst, std::abs(extracted.sample(z + shift) - reference.sample(z)));
  return worst;
}

}  // namespace sbmlab
