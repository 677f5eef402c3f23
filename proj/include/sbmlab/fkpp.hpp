#pragma once

// Cauchy solves for the barrier-frame fields: u (plain mechanism), u_star
// (mechanism shifted by lambda*), and the immigration factor v, marched by
// Strang splitting: half-step reaction, Crank-Nicolson diffusion for
// (1/2) d_xx, half-step reaction. The reaction flow is exact for quadratic
// mechanisms and implicit midpoint otherwise. Initial data is the blow-up
// cap left of the origin; the left boundary follows the space-homogeneous
// reaction ODE, the right boundary sits at the field's spatial limit.
//
// v is marched twice: once as 1 - (u - u*)/lambda* (clamped), and once
// through its own reaction-diffusion equation, which resolves the deep
// tails that the subtraction route cannot (relative precision survives far
// below the u/u* discretization floor). Both routes agree wherever v is
// well conditioned; tests assert it.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "sbmlab/common.hpp"
#include "sbmlab/grid.hpp"
#include "sbmlab/mechanism.hpp"

namespace sbmlab {

enum class PsiShift { none, lambda_star };

struct CauchyOptions {
  double cap_multiple = 100.0;         // initial barrier value = cap_multiple * lambda*
  std::vector<double> snapshot_times;  // stepping lands on these exactly
  bool store_every_step = false;       // dense history (Feynman-Kac input)
  int rannacher_steps = 4;             // backward-Euler start-up steps
};

struct FieldTriple {
  SpaceTimeField u;
  SpaceTimeField u_star;
  SpaceTimeField v;         // subtraction route, clamped to [0, 1]
  SpaceTimeField v_direct;  // direct solve, kind v_scaled
};

namespace detail {

// Exact flow over time h of w' = -c1 w - c2 w^2. c2 < 0 occurs in the v-mode
// Riccati; every use keeps the denominator positive (see call sites).
inline double riccati_step(double w0, double c1, double c2, double h) {
  if (w0 <= 0.0) return 0.0;
  if (c1 == 0.0) return w0 / (1.0 + c2 * w0 * h);
  if (c1 > 0.0) {
    const double decay = std::exp(-c1 * h);
    const double denom = c1 + c2 * w0 * (-std::expm1(-c1 * h));
    return c1 * w0 * decay / denom;
  }
  const double a = -c1;  // growth branch, factor the growing exponential
  const double eg = std::expm1(a * h);
  return a * w0 * (eg + 1.0) / (a + c2 * w0 * eg);
}

enum class ReactionMode { plain, shifted, vfield };

// One reaction half-step. `aux` is the u* value at the cell (v-mode only).
class Reaction {
 public:
  Reaction(const BranchingMechanism& mech, const DerivedConstants& consts, ReactionMode mode)
      : mech_(mech), consts_(consts), mode_(mode), quadratic_(mech.is_quadratic()) {}

  // `aux` is the u* value at the start of the half-step (v-mode only); the
  // v flow advances the (u*, v) pair exactly for quadratic mechanisms, so
  // the fast early collapse of u* costs no accuracy.
  double step(double w, double aux, double h) const {
    if (quadratic_) {
      switch (mode_) {
        case ReactionMode::plain:
          return riccati_step(w, -mech_.alpha, mech_.beta, h);
        case ReactionMode::shifted:
          return riccati_step(w, consts_.q, mech_.beta, h);
        case ReactionMode::vfield:
          return pair_flow_quadratic(w, aux, h);
      }
    }
    if (mode_ == ReactionMode::vfield) return pair_flow_general(w, aux, h);
    return midpoint_step(w, aux, h);
  }

 private:
  // lambda* v is the gap between two solutions of w' = -psi*(w) started at
  // u*_0 and u*_0 - lambda* v_0. For quadratic psi* the gap of two logistic
  // flows collapses to a cancellation-free closed form.
  double pair_flow_quadratic(double v0, double us0, double h) const {
    if (v0 <= 0.0) return 0.0;
    const double q = consts_.q, b = mech_.beta;
    const double s = -std::expm1(-q * h);
    const double lower = us0 - consts_.lambda_star * v0;
    const double denom = (q + b * us0 * s) * (q + b * lower * s);
    return q * q * std::exp(-q * h) * v0 / denom;
  }

  // General mechanisms: d = lambda* v obeys d' = -Psi(u*, d) d with
  // Psi = [psi*(u*) - psi*(u* - d)]/d; integrate log d by the midpoint rule
  // with u* advanced along its own reaction flow.
  double pair_flow_general(double v0, double us0, double h) const {
    if (v0 <= 0.0) return 0.0;
    const double ls = consts_.lambda_star;
    auto big_psi = [&](double us, double d) {
      const double m = ls + us;
      if (d > 0.1 * m)
        return (eval_psi(mech_, m) - eval_psi(mech_, std::max(m - d, 0.0))) / d;
      return eval_psi(mech_, std::max(m - 0.5 * d, 0.0), 1);
    };
    Reaction shifted(mech_, consts_, ReactionMode::shifted);
    const double us_half = shifted.midpoint_public(us0, 0.5 * h);
    const double d0 = ls * v0;
    const double guess = v0 * std::exp(-h * big_psi(us_half, d0));
    const double d_mid = ls * 0.5 * (v0 + guess);
    return std::min(v0 * std::exp(-h * big_psi(us_half, d_mid)), 1.0);
  }

 public:
  double midpoint_public(double w, double h) const { return midpoint_step(w, 0.0, h); }

 private:
  double rhs(double w, double aux) const {  // w' = -rhs(w)
    switch (mode_) {
      case ReactionMode::plain:
        return eval_psi(mech_, std::max(w, 0.0));
      case ReactionMode::shifted:
        return eval_psi(mech_, consts_.lambda_star + std::max(w, 0.0));
      case ReactionMode::vfield: {
        const double m = consts_.lambda_star + aux;
        const double arg = std::max(m - consts_.lambda_star * w, 0.0);
        return (eval_psi(mech_, m) - eval_psi(mech_, arg)) / consts_.lambda_star;
      }
    }
    return 0.0;
  }

  double rhs_deriv(double w, double aux) const {
    switch (mode_) {
      case ReactionMode::plain:
        return eval_psi(mech_, std::max(w, 0.0), 1);
      case ReactionMode::shifted:
        return eval_psi(mech_, consts_.lambda_star + std::max(w, 0.0), 1);
      case ReactionMode::vfield: {
        const double arg = std::max(consts_.lambda_star + aux - consts_.lambda_star * w, 0.0);
        return eval_psi(mech_, arg, 1);
      }
    }
    return 0.0;
  }

  double midpoint_step(double w0, double aux, double h) const {
    double w1 = w0;
    const double scale = std::max(std::abs(w0), 1.0);
    for (int it = 0; it < 40; ++it) {
      const double m = 0.5 * (w0 + w1);
      const double f = w1 - w0 + h * rhs(m, aux);
      const double fp = 1.0 + 0.5 * h * rhs_deriv(m, aux);
      if (!(std::abs(fp) > 1e-12)) break;
      const double next = w1 - f / fp;
      if (std::abs(next - w1) <= 1e-14 * scale) return std::max(next, 0.0);
      w1 = next;
    }
    // Bisection fallback on a bracket that always contains the flow.
    double lo = 0.0, hi = std::max(w0 * std::exp(mech_.alpha * h) + consts_.lambda_star, 1.0);
    auto F = [&](double x) { return x - w0 + h * rhs(0.5 * (w0 + x), aux); };
    if (F(lo) > 0.0) return 0.0;
    for (int it = 0; it < 90; ++it) {
      const double mid = 0.5 * (lo + hi);
      (F(mid) > 0.0 ? hi : lo) = mid;
    }
    return std::max(0.5 * (lo + hi), 0.0);
  }

  const BranchingMechanism& mech_;
  const DerivedConstants& consts_;
  ReactionMode mode_;
  bool quadratic_;
};

// Tridiagonal solve for the implicit diffusion stage. Endpoints are frozen
// Dirichlet values; `mu_im`/`mu_ex` are the implicit and explicit stencil
// weights (Crank-Nicolson: dt/(4 dx^2) both; backward Euler: dt/(2 dx^2), 0).
inline void diffuse_dirichlet(std::vector<double>& w, double mu_im, double mu_ex,
                              std::vector<double>& rhs, std::vector<double>& cw) {
  const std::size_t n = w.size();
  if (n < 3) return;
  rhs.resize(n);
  cw.resize(n);
  for (std::size_t i = 1; i + 1 < n; ++i)
    rhs[i] = w[i] + mu_ex * (w[i - 1] - 2.0 * w[i] + w[i + 1]);
  rhs[1] += mu_im * w[0];
  rhs[n - 2] += mu_im * w[n - 1];
  const double diag = 1.0 + 2.0 * mu_im;
  // Thomas sweep
  cw[1] = -mu_im / diag;
  rhs[1] /= diag;
  for (std::size_t i = 2; i + 1 < n; ++i) {
    const double m = diag + mu_im * cw[i - 1];
    cw[i] = -mu_im / m;
    rhs[i] = (rhs[i] + mu_im * rhs[i - 1]) / m;
  }
  w[n - 2] = rhs[n - 2];
  for (std::size_t i = n - 3; i >= 1; --i) {
    w[i] = rhs[i] - cw[i] * w[i + 1];
    if (i == 1) break;
  }
}

struct MarcherRequest {
  bool want_u = false;
  bool want_ustar = false;
  bool want_v = false;
  bool v_zero_aux = false;        // BBM max-CDF mode: v-equation with u* == 0
  bool v_indicator_init = false;  // v(0, x) = 1_{x >= 0} instead of 1
};

class FkppMarcher {
 public:
  FkppMarcher(const BranchingMechanism& mech, const DerivedConstants& consts,
              const TestFunction& f, const GridSpec& grid, const CauchyOptions& opts,
              const MarcherRequest& req)
      : mech_(mech),
        consts_(consts),
        f_(f),
        grid_(grid),
        opts_(opts),
        req_(req),
        react_u_(mech, consts, ReactionMode::plain),
        react_us_(mech, consts, ReactionMode::shifted),
        react_v_(mech, consts, ReactionMode::vfield) {
    grid_.validate();
    f_.validate();
    cap_ = opts.cap_multiple * consts.lambda_star;
    if (!(cap_ >= 50.0 * consts.lambda_star))
      throw ValidationError("solve_cauchy: cap must be at least 50 * lambda*");
    const int n = grid_.cells();
    if (req_.want_u) u_.assign(n, 0.0);
    if (req_.want_ustar || (req_.want_v && !req_.v_zero_aux)) us_.assign(n, 0.0);
    if (req_.want_v) v_.assign(n, 0.0);
    init_fields();
    init_outputs();
  }

  void run() {
    record_snapshots(0.0);
    double t = 0.0;
    std::size_t next_snap = 0;
    while (next_snap < snap_times_.size() && snap_times_[next_snap] <= 1e-14) ++next_snap;
    int step_no = 0;
    const double alpha = mech_.alpha;
    const double speed = std::sqrt(2.0 * alpha);
    while (t < grid_.t_max - 1e-12) {
      double dt = std::min(grid_.dt, grid_.t_max - t);
      if (next_snap < snap_times_.size()) dt = std::min(dt, snap_times_[next_snap] - t);
      if (dt <= 0.0) {
        ++next_snap;
        continue;
      }
      advance(dt, step_no < opts_.rannacher_steps);
      t += dt;
      ++step_no;
      if (grid_.moving_window) {
        const double target = std::floor(speed * t / grid_.dx) * grid_.dx;
        while (offset_ + 0.5 * grid_.dx < target) shift_window();
      }
      bool record = opts_.store_every_step;
      if (next_snap < snap_times_.size() && t >= snap_times_[next_snap] - 1e-12) {
        record = true;
        ++next_snap;
      }
      if (t >= grid_.t_max - 1e-12) record = true;
      if (record) {
        check_health(t);
        record_snapshots(t);
      }
    }
  }

  SpaceTimeField out_u, out_us, out_v;
  double boundary_u() const { return b_u_; }
  double boundary_ustar() const { return b_us_; }

 private:
  void init_fields() {
    const int n = grid_.cells();
    for (int i = 0; i < n; ++i) {
      const double x = grid_.x_min + i * grid_.dx;
      const double init_u = (x < 0.0) ? cap_ : f_.initial(x);
      if (!u_.empty()) u_[static_cast<std::size_t>(i)] = init_u;
      if (!us_.empty()) us_[static_cast<std::size_t>(i)] = init_u;
      if (!v_.empty())
        v_[static_cast<std::size_t>(i)] = req_.v_indicator_init ? (x >= 0.0 ? 1.0 : 0.0) : 1.0;
    }
    b_u_ = cap_;
    b_us_ = cap_;
    b_v_ = req_.v_indicator_init ? 0.0 : 1.0;
    snap_times_ = opts_.snapshot_times;
    std::sort(snap_times_.begin(), snap_times_.end());
  }

  void init_outputs() {
    auto prep = [&](SpaceTimeField& fld, const char* kind) {
      fld.grid = grid_;
      fld.kind = kind;
      fld.zero_test_function = f_.is_zero();
    };
    prep(out_u, "u");
    prep(out_us, "u_star");
    prep(out_v, "v_scaled");
  }

  void advance(double dt, bool backward_euler) {
    const double h = 0.5 * dt;
    const std::size_t n = static_cast<std::size_t>(grid_.cells());
    const bool v_active = req_.want_v;
    const bool us_active = !us_.empty();

    if (!u_.empty()) strang_field(u_, react_u_, b_u_, 0.0, dt, backward_euler);

    // u*: leading half-reaction, diffusion, then capture the mid state; the
    // v reaction's two halves see u* at the start of each half, which makes
    // the composite exact on the flat plateau for quadratic mechanisms.
    double b_us_old = b_us_, b_us_mid = b_us_;
    if (us_active) {
      if (v_active) {
        us_old_.resize(n);
        std::memcpy(us_old_.data(), us_.data(), n * sizeof(double));
      }
      for (double& x : us_) x = react_us_.step(x, 0.0, h);
      b_us_ = react_us_.step(b_us_, 0.0, h);
      diffuse(us_, dt, backward_euler);
      if (v_active) {
        us_mid_.resize(n);
        std::memcpy(us_mid_.data(), us_.data(), n * sizeof(double));
        b_us_mid = b_us_;
      }
      for (double& x : us_) x = react_us_.step(x, 0.0, h);
      b_us_ = react_us_.step(b_us_, 0.0, h);
      us_.front() = b_us_;
      us_.back() = 0.0;
    }

    if (v_active) {
      const bool zero_aux = req_.v_zero_aux;
      for (std::size_t i = 0; i < n; ++i)
        v_[i] = react_v_.step(v_[i], zero_aux ? 0.0 : us_old_[i], h);
      double bv = react_v_.step(b_v_, zero_aux ? 0.0 : b_us_old, h);
      diffuse(v_, dt, backward_euler);
      for (std::size_t i = 0; i < n; ++i)
        v_[i] = std::clamp(react_v_.step(v_[i], zero_aux ? 0.0 : us_mid_[i], h), 0.0, 1.0);
      bv = react_v_.step(bv, zero_aux ? 0.0 : b_us_mid, h);
      b_v_ = zero_aux ? 0.0 : std::clamp(bv, 0.0, 1.0);
      v_.front() = b_v_;
      v_.back() = 1.0;
    }
  }

  // Full Strang step of one u-kind field together with its boundary scalar.
  void strang_field(std::vector<double>& w, const Reaction& react, double& b_left,
                    double right_value, double dt, bool backward_euler) {
    const double h = 0.5 * dt;
    for (double& x : w) x = react.step(x, 0.0, h);
    b_left = react.step(b_left, 0.0, h);
    diffuse(w, dt, backward_euler);
    for (double& x : w) x = react.step(x, 0.0, h);
    b_left = react.step(b_left, 0.0, h);
    w.front() = b_left;
    w.back() = right_value;
  }

  void diffuse(std::vector<double>& w, double dt, bool backward_euler) {
    const double inv = dt / (grid_.dx * grid_.dx);
    if (backward_euler) {
      diffuse_dirichlet(w, 0.5 * inv, 0.0, scratch_rhs_, scratch_cw_);
    } else {
      diffuse_dirichlet(w, 0.25 * inv, 0.25 * inv, scratch_rhs_, scratch_cw_);
    }
  }

  void shift_window() {
    auto shift = [&](std::vector<double>& w, double right_value) {
      if (w.empty()) return;
      std::memmove(w.data(), w.data() + 1, (w.size() - 1) * sizeof(double));
      w.back() = right_value;
    };
    shift(u_, 0.0);
    shift(us_, 0.0);
    shift(v_, 1.0);
    offset_ += grid_.dx;
  }

  void check_health(double t) {
    auto scan = [&](const std::vector<double>& w, const char* name, double floor) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (!std::isfinite(w[i]) || w[i] < floor) {
          const double x = grid_.x_min + offset_ + i * grid_.dx;
          throw NumericalError(std::string("fkpp: instability in ") + name + " at t=" +
                               std::to_string(t) + " x=" + std::to_string(x));
        }
      }
    };
    if (!u_.empty()) scan(u_, "u", -1e-9 * std::max(1.0, cap_));
    if (!us_.empty()) scan(us_, "u_star", -1e-9 * std::max(1.0, cap_));
    if (!v_.empty()) scan(v_, "v", -1e-9);
  }

  void record_snapshots(double t) {
    auto push = [&](SpaceTimeField& fld, const std::vector<double>& w) {
      fld.times.push_back(t);
      fld.offsets.push_back(offset_);
      fld.values.push_back(w);
    };
    if (req_.want_u && !u_.empty()) push(out_u, u_);
    if (req_.want_ustar && !us_.empty()) push(out_us, us_);
    if (req_.want_v && !v_.empty()) push(out_v, v_);
  }

  BranchingMechanism mech_;
  DerivedConstants consts_;
  TestFunction f_;
  GridSpec grid_;
  CauchyOptions opts_;
  MarcherRequest req_;
  Reaction react_u_, react_us_, react_v_;
  double cap_ = 0.0;
  double offset_ = 0.0;
  double b_u_ = 0.0, b_us_ = 0.0, b_v_ = 1.0;
  std::vector<double> u_, us_, v_, us_old_, us_mid_;
  std::vector<double> scratch_rhs_, scratch_cw_;
  std::vector<double> snap_times_;
};

}  // namespace detail

// Single-field Cauchy solve. With psi_shift = none the result is u and
// exp(-u(t, x)) is the model's P(M_t <= x) for f = 0; with lambda_star it is
// the conditioned-field u*.
inline SpaceTimeField solve_cauchy(const BranchingMechanism& mech, const DerivedConstants& consts,
                                   const TestFunction& f, PsiShift shift, const GridSpec& grid,
                                   const CauchyOptions& opts) {
  detail::MarcherRequest req;
  req.want_u = (shift == PsiShift::none);
  req.want_ustar = (shift == PsiShift::lambda_star);
  detail::FkppMarcher m(mech, consts, f, grid, opts, req);
  m.run();
  return (shift == PsiShift::none) ? std::move(m.out_u) : std::move(m.out_us);
}

// u, u*, v on a shared grid. v is defined as 1 - (u - u*)/lambda* (clamped);
// v_direct carries the same quantity from its own solve for deep-tail use.
inline FieldTriple compute_uv_triple(const BranchingMechanism& mech,
                                     const DerivedConstants& consts, const TestFunction& f,
                                     const GridSpec& grid, const CauchyOptions& opts) {
  detail::MarcherRequest req;
  req.want_u = true;
  req.want_ustar = true;
  req.want_v = true;
  detail::FkppMarcher m(mech, consts, f, grid, opts, req);
  m.run();
  FieldTriple out;
  out.u = std::move(m.out_u);
  out.u_star = std::move(m.out_us);
  out.v_direct = std::move(m.out_v);
  out.v = out.v_direct;
  out.v.kind = "v";
  for (std::size_t s = 0; s < out.u.times.size(); ++s) {
    auto& row = out.v.values[s];
    const auto& uu = out.u.values[s];
    const auto& ss = out.u_star.values[s];
    for (std::size_t i = 0; i < row.size(); ++i)
      row[i] = std::clamp(1.0 - (uu[i] - ss[i]) / consts.lambda_star, 0.0, 1.0);
  }
  return out;
}

// Max-CDF of the skeleton branching Brownian motion: F_t = (1/2) F_xx +
// q (varphi(F) - F), F(0, x) = 1_{x >= 0}. Same equation as the v-field with
// u* == 0, by q(varphi(s) - s) = psi(lambda*(1 - s))/lambda*.
inline SpaceTimeField solve_bbm_cdf(const BranchingMechanism& mech,
                                    const DerivedConstants& consts, const GridSpec& grid,
                                    const CauchyOptions& opts) {
  detail::MarcherRequest req;
  req.want_v = true;
  req.v_zero_aux = true;
  req.v_indicator_init = true;
  detail::FkppMarcher m(mech, consts, TestFunction::zero(), grid, opts, req);
  m.run();
  return std::move(m.out_v);
}

namespace detail {

// Second-order Taylor remainder Q = int_0^1 (1-s) psi''(m - s h) ds by
// Gauss-Legendre; exact when psi'' is constant (quadratic mechanisms).
inline double taylor_remainder_q(const BranchingMechanism& mech, double m, double h) {
  if (mech.is_quadratic()) return mech.beta;
  static constexpr double nodes[8] = {0.01985507175123188, 0.10166676129318664,
                                      0.2372337950418355,  0.40828267875217505,
                                      0.5917173212478249,  0.7627662049581645,
                                      0.8983332387068134,  0.9801449282487681};
  static constexpr double wts[8] = {0.05061426814518813, 0.11119051722668723,
                                    0.15685332293894363, 0.18134189168918097,
                                    0.18134189168918097, 0.15685332293894363,
                                    0.11119051722668723, 0.05061426814518813};
  double acc = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double s = nodes[i];
    const double arg = std::max(m - s * h, 1e-300);
    acc += wts[i] * (1.0 - s) * eval_psi(mech, arg, 2);
  }
  return acc;
}

}  // namespace detail

// G-hat and G evaluated from aligned (u, u*, v) snapshots. Computed through
// the Taylor-remainder form G-hat = lambda* v^2 Q(lambda* + u*, lambda* v),
// which is algebraically the defining expression but free of the
// catastrophic cancellation the raw psi-differences have at small v.
inline std::pair<SpaceTimeField, SpaceTimeField> g_fields(const SpaceTimeField& u,
                                                          const SpaceTimeField& u_star,
                                                          const SpaceTimeField& v,
                                                          const BranchingMechanism& mech,
                                                          const DerivedConstants& consts) {
  if (u_star.times.size() != v.times.size())
    throw ValidationError("g_fields: u* and v must share snapshots");
  (void)u;  // the identity u = lambda* + u* - lambda* v substitutes u away
  SpaceTimeField ghat = v, g = v;
  ghat.kind = "g_hat";
  g.kind = "g";
  const double ls = consts.lambda_star;
  for (std::size_t s = 0; s < v.times.size(); ++s) {
    const auto& usr = u_star.values[s];
    const auto& vr = v.values[s];
    auto& hr = ghat.values[s];
    auto& gr = g.values[s];
    for (std::size_t i = 0; i < vr.size(); ++i) {
      const double m = ls + usr[i];
      const double h = ls * vr[i];
      const double q2 = detail::taylor_remainder_q(mech, m, h);
      const double gh = ls * vr[i] * vr[i] * q2;
      hr[i] = gh;
      gr[i] = gh - little_phi(consts, mech, usr[i]) * vr[i];
    }
  }
  return {std::move(ghat), std::move(g)};
}

}  // namespace sbmlab
