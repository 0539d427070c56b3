#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "cbf/classk.hpp"
#include "cbf/constraint.hpp"
#include "cbf/dynamics.hpp"
#include "cbf/types.hpp"

namespace cbf {

// Result of one pointwise value computation. value is always re-derived from
// the rolled-out trajectory, never carried from the relaxed objective.
struct PointSolve {
  Vec x0;
  std::vector<Vec> u_star;  // N x m, all inside the input box
  std::vector<Vec> x_star;  // N+1 x n
  int k_star = 0;
  double value = -std::numeric_limits<double>::infinity();
  bool feasible = false;
  int restarts_used = 0;
  bool converged = false;
  double terminal_violation = std::numeric_limits<double>::infinity();
};

struct SolverOptions {
  int max_iters = 400;          // per penalty round
  double step_tol = 1e-10;      // inf-norm of accepted step
  double rel_tol = 1e-9;        // relative objective decrease over rel_window iters
  int rel_window = 5;
  std::array<double, 3> mu_rounds{1e2, 1e4, 1e6};
  double armijo_c1 = 1e-4;
  int max_backtracks = 40;
  int escape_lattice = 5;      // per-dim candidates of the h-ascent restart
  bool builtin_starts = true;  // false: optimize only the supplied warm starts
};

// Scaled even-p norm; exact lower bound max(v) holds in floats because the
// largest ratio is exactly 1.
inline double pnorm_of(const double* v, int n, int p) {
  double vmax = 0.0;
  for (int i = 0; i < n; ++i) vmax = std::max(vmax, v[i]);
  if (vmax == 0.0) return 0.0;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::pow(v[i] / vmax, p);
  return vmax * std::pow(s, 1.0 / p);
}

namespace detail {

inline double decayed_margin(const SynthesisSpec& spec, const ClassKe& a, double h, int k) {
  const double t = k * spec.dt();
  if (spec.variant == Variant::GammaPenalty) return h - spec.gamma * t;
  return h + alpha_bar_eval(ClippedAlpha{a}, h) * t;
}

inline double denom_slope(const SynthesisSpec& spec, const ClassKe& a, double h, int k) {
  if (spec.variant == Variant::GammaPenalty) return 1.0;
  return 1.0 + alpha_bar_deriv(ClippedAlpha{a}, h) * k * spec.dt();
}

}  // namespace detail

// ||v||_p with v_k = 1/(h(x_k) - gamma*k*dt + htilde); the alpha variant uses
// h + alpha_bar(h)*k*dt instead of the linear decay.
inline double pnorm_objective(const SynthesisSpec& spec, const ConstraintField& field,
                              const std::vector<Vec>& x_seq) {
  const ClassKe a{spec.c, spec.gamma};
  std::vector<double> v(x_seq.size());
  for (std::size_t k = 0; k < x_seq.size(); ++k) {
    const double d =
        detail::decayed_margin(spec, a, h_eval(field, x_seq[k]), static_cast<int>(k)) +
        spec.htilde;
    if (!(d > 0.0))
      throw std::runtime_error(
          "pnorm_objective: nonpositive denominator at step " + std::to_string(k) +
          "; htilde must exceed max{0, gamma*T - min_D h}");
    v[k] = 1.0 / d;
  }
  return pnorm_of(v.data(), static_cast<int>(v.size()), spec.pnorm);
}

// Post-horizon cap (delta - gamma*T; delta - gamma*tbar when tbar is set;
// delta in the alpha variant).
inline double saturate(const SynthesisSpec& spec, double value) {
  return std::min(value, saturation_level(spec));
}

// Saturated mode: points already in F take the level without optimizing.
inline std::optional<double> solve_point_on_f_shortcut(const SynthesisSpec& spec,
                                                       const InvariantSubset& sub,
                                                       const ConstraintField& field,
                                                       const Vec& x0) {
  if (f_member(sub, field, x0)) return saturation_level(spec);
  return std::nullopt;
}

namespace detail {

// Smooth relaxed objective for one penalty weight mu: scaled p-norm of the
// reciprocal margins plus a terminal-reach penalty. any_time mode penalizes a
// softmin over per-step violations; at_final_step penalizes the last step.
struct PointProblem {
  const SynthesisSpec& spec;
  const ControlSystem& sys;
  const ConstraintField& field;
  const InvariantSubset& sub;
  ClassKe alpha;
  Vec x0;
  int N;
  int m;
  double dt;
  double beta;  // softmin sharpness

  // workspace
  std::vector<Vec> xs;
  std::vector<double> hk;
  std::vector<double> vk;
  std::vector<double> dphi_dh;
  Vec utmp, xbar, ubar, xnext_bar;

  PointProblem(const SynthesisSpec& s, const ControlSystem& sy, const ConstraintField& f,
               const InvariantSubset& su, Vec start)
      : spec(s), sys(sy), field(f), sub(su), alpha{s.c, s.gamma}, x0(std::move(start)),
        N(s.steps), m(sy.input_dim), dt(s.dt()),
        beta(200.0 / std::max(1.0, std::abs(su.threshold))) {
    xs.resize(static_cast<std::size_t>(N) + 1);
    hk.resize(static_cast<std::size_t>(N) + 1);
    vk.resize(static_cast<std::size_t>(N) + 1);
    dphi_dh.resize(static_cast<std::size_t>(N) + 1);
    utmp.resize(m);
  }

  void roll(const Eigen::VectorXd& uflat) {
    xs[0] = x0;
    for (int k = 0; k < N; ++k) {
      utmp = uflat.segment(static_cast<Eigen::Index>(k) * m, m);
      xs[static_cast<std::size_t>(k) + 1] = rk4_step(sys, xs[static_cast<std::size_t>(k)], utmp, dt);
    }
    for (int k = 0; k <= N; ++k) hk[static_cast<std::size_t>(k)] = h_eval(field, xs[static_cast<std::size_t>(k)]);
  }

  // Penalty value and (optionally) d pen / d h_k accumulated into dphi_dh
  // scaled by mu. Returns the penalty value (without mu).
  double penalty(double mu, bool with_grad) {
    const double thr = sub.threshold;
    if (spec.terminal_mode == TerminalMode::AtFinalStep) {
      const double w = std::max(0.0, thr - hk[static_cast<std::size_t>(N)]);
      if (with_grad && w > 0.0) dphi_dh[static_cast<std::size_t>(N)] += mu * (-2.0 * w);
      return w * w;
    }
    // softmin over per-step violations, stabilized by the running min
    double wmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= N; ++k)
      wmin = std::min(wmin, std::max(0.0, thr - hk[static_cast<std::size_t>(k)]));
    double W = 0.0;
    for (int k = 0; k <= N; ++k) {
      const double w = std::max(0.0, thr - hk[static_cast<std::size_t>(k)]);
      W += std::exp(-beta * (w - wmin));
    }
    const double sm = wmin - std::log(W) / beta;
    if (sm <= 0.0) return 0.0;
    if (with_grad) {
      for (int k = 0; k <= N; ++k) {
        const double w = std::max(0.0, thr - hk[static_cast<std::size_t>(k)]);
        if (w > 0.0) {
          const double s = std::exp(-beta * (w - wmin)) / W;
          dphi_dh[static_cast<std::size_t>(k)] += mu * 2.0 * sm * s * (-1.0);
        }
      }
    }
    return sm * sm;
  }

  // Relaxed objective; fills dphi_dh (d objective / d h_k) when with_grad.
  double objective(const Eigen::VectorXd& uflat, double mu, bool with_grad) {
    roll(uflat);
    for (int k = 0; k <= N; ++k) {
      double d = decayed_margin(spec, alpha, hk[static_cast<std::size_t>(k)], k) + spec.htilde;
      d = std::max(d, 1e-12);  // guarded; validated configs keep d positive
      vk[static_cast<std::size_t>(k)] = 1.0 / d;
    }
    const double J = pnorm_of(vk.data(), N + 1, spec.pnorm);
    if (with_grad) {
      for (int k = 0; k <= N; ++k) {
        const double v = vk[static_cast<std::size_t>(k)];
        const double r = std::pow(v / J, spec.pnorm - 1);
        dphi_dh[static_cast<std::size_t>(k)] =
            r * (-v * v) * denom_slope(spec, alpha, hk[static_cast<std::size_t>(k)], k);
      }
    }
    const double pen = penalty(mu, with_grad);
    return J + mu * pen;
  }

  double eval(const Eigen::VectorXd& uflat, double mu) { return objective(uflat, mu, false); }

  double eval_grad(const Eigen::VectorXd& uflat, double mu, Eigen::VectorXd& grad) {
    const double phi = objective(uflat, mu, true);
    grad.setZero(static_cast<Eigen::Index>(N) * m);
    // adjoint sweep: xnext_bar = d phi / d x_{k+1}
    xnext_bar = dphi_dh[static_cast<std::size_t>(N)] * h_grad(field, xs[static_cast<std::size_t>(N)]);
    for (int k = N - 1; k >= 0; --k) {
      utmp = uflat.segment(static_cast<Eigen::Index>(k) * m, m);
      rk4_vjp(sys, xs[static_cast<std::size_t>(k)], utmp, dt, xnext_bar, xbar, ubar);
      grad.segment(static_cast<Eigen::Index>(k) * m, m) = ubar;
      xnext_bar = xbar + dphi_dh[static_cast<std::size_t>(k)] * h_grad(field, xs[static_cast<std::size_t>(k)]);
    }
    return phi;
  }

  // Exact (unrelaxed) quantities from the last roll().
  double true_value(int& k_star) const {
    double best = std::numeric_limits<double>::infinity();
    k_star = 0;
    for (int k = 0; k <= N; ++k) {
      const double m_k = decayed_margin(spec, alpha, hk[static_cast<std::size_t>(k)], k);
      if (m_k < best) {
        best = m_k;
        k_star = k;
      }
    }
    return best;
  }

  double violation() const {
    const double thr = sub.threshold;
    if (spec.terminal_mode == TerminalMode::AtFinalStep)
      return std::max(0.0, thr - hk[static_cast<std::size_t>(N)]);
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= N; ++k) best = std::max(best, hk[static_cast<std::size_t>(k)]);
    return std::max(0.0, thr - best);
  }
};

struct Candidate {
  Eigen::VectorXd u;
  double value = -std::numeric_limits<double>::infinity();
  int k_star = 0;
  double violation = std::numeric_limits<double>::infinity();
  bool converged = false;
};

// (feasible, value) ordering; infeasible candidates rank by smaller violation.
inline bool better_candidate(const Candidate& a, const Candidate& b) {
  const bool fa = a.violation == 0.0, fb = b.violation == 0.0;
  if (fa != fb) return fa;
  if (!fa && a.violation != b.violation) return a.violation < b.violation;
  return a.value > b.value;
}

// Projected gradient with Armijo backtracking over the flattened input
// sequence; projection is a per-coordinate clamp. Returns convergence flag.
inline bool minimize_round(PointProblem& prob, const Box& ubox, double mu, int max_iters,
                           const SolverOptions& opts, Eigen::VectorXd& u) {
  const int n = static_cast<int>(u.size());
  const int m = prob.m;
  auto clamp_flat = [&](Eigen::VectorXd& w) {
    for (int i = 0; i < n; ++i) {
      const int j = i % m;
      w[i] = std::min(std::max(w[i], ubox.lo[j]), ubox.hi[j]);
    }
  };
  clamp_flat(u);

  double range = 0.0;
  for (int j = 0; j < m; ++j) range = std::max(range, ubox.hi[j] - ubox.lo[j]);

  Eigen::VectorXd g(n), u_new(n);
  std::vector<double> hist;
  hist.reserve(static_cast<std::size_t>(max_iters) + 1);

  double phi = prob.eval_grad(u, mu, g);
  hist.push_back(phi);
  double step0 = 0.0;

  for (int it = 0; it < max_iters; ++it) {
    const double ginf = g.lpNorm<Eigen::Infinity>();
    if (ginf == 0.0) return true;
    if (it == 0)
      step0 = 0.1 * range / ginf;
    else
      step0 = std::min(step0 * 2.0, 1e6);

    double alpha = step0;
    bool accepted = false;
    double phi_new = phi;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      u_new = u - alpha * g;
      clamp_flat(u_new);
      const double step_inf = (u_new - u).lpNorm<Eigen::Infinity>();
      if (step_inf < opts.step_tol) return true;
      phi_new = prob.eval(u_new, mu);
      const double pred = opts.armijo_c1 * g.dot(u - u_new);
      if (phi_new <= phi - pred) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) return true;  // step collapsed below representable descent
    step0 = alpha;
    u = u_new;
    phi = prob.eval_grad(u, mu, g);
    hist.push_back(phi);
    const std::size_t w = static_cast<std::size_t>(opts.rel_window);
    if (hist.size() > w) {
      const double prev = hist[hist.size() - 1 - w];
      if ((prev - phi) / std::max(1.0, std::abs(prev)) < opts.rel_tol) return true;
    }
  }
  return false;
}

// Greedy one-step-lookahead ascent of h over a small input lattice; the
// escape restart for points that must climb out of the constraint violation.
inline Eigen::VectorXd escape_seed(PointProblem& prob, const Box& ubox, int lattice) {
  const int m = prob.m, N = prob.N;
  std::vector<Vec> cands;
  const int total = static_cast<int>(std::pow(lattice, m));
  cands.reserve(static_cast<std::size_t>(total));
  for (int c = 0; c < total; ++c) {
    Vec u(m);
    int rem = c;
    for (int j = 0; j < m; ++j) {
      const int idx = rem % lattice;
      rem /= lattice;
      u[j] = lattice == 1 ? 0.5 * (ubox.lo[j] + ubox.hi[j])
                          : ubox.lo[j] + (ubox.hi[j] - ubox.lo[j]) * idx / (lattice - 1);
    }
    cands.push_back(std::move(u));
  }
  Eigen::VectorXd uflat(static_cast<Eigen::Index>(N) * m);
  Vec x = prob.x0;
  for (int k = 0; k < N; ++k) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int c = 0; c < total; ++c) {
      const Vec xn = rk4_step(prob.sys, x, cands[static_cast<std::size_t>(c)], prob.dt);
      const double hn = h_eval(prob.field, xn);
      if (hn > best) {
        best = hn;
        arg = c;
      }
    }
    uflat.segment(static_cast<Eigen::Index>(k) * m, m) = cands[static_cast<std::size_t>(arg)];
    x = rk4_step(prob.sys, x, cands[static_cast<std::size_t>(arg)], prob.dt);
  }
  return uflat;
}

}  // namespace cbf::detail

// Pointwise value computation (Algorithm-1 style): multi-start projected
// gradient on the relaxed objective with escalating terminal penalty, then
// exact value extraction from the best trajectory. Deterministic in
// (spec, x0, seed, warm_starts). Never throws on optimization failure.
inline PointSolve solve_point(const SynthesisSpec& spec, const ControlSystem& sys,
                              const ConstraintField& field, const InvariantSubset& sub,
                              const Vec& x0, std::uint64_t seed,
                              const std::vector<Eigen::VectorXd>& warm_starts = {},
                              const SolverOptions& opts = {}) {
  detail::PointProblem prob(spec, sys, field, sub, x0);
  const Box& ubox = sys.input_box;
  const int N = spec.steps, m = sys.input_dim;
  const Eigen::Index nu = static_cast<Eigen::Index>(N) * m;

  // restart seeds: zero-or-midpoint, h-ascent heuristic, seeded random,
  // then any supplied warm starts
  std::vector<Eigen::VectorXd> starts;
  if (opts.builtin_starts) {
    {
      Vec u0 = ubox.contains(Vec::Zero(m)) ? Vec(Vec::Zero(m)) : ubox.midpoint();
      Eigen::VectorXd flat(nu);
      for (int k = 0; k < N; ++k) flat.segment(static_cast<Eigen::Index>(k) * m, m) = u0;
      starts.push_back(std::move(flat));
    }
    starts.push_back(detail::escape_seed(prob, ubox, opts.escape_lattice));
    {
      SplitMix64 rng(seed);
      Eigen::VectorXd flat(nu);
      for (Eigen::Index i = 0; i < nu; ++i) {
        const int j = static_cast<int>(i % m);
        flat[i] = rng.uniform(ubox.lo[j], ubox.hi[j]);
      }
      starts.push_back(std::move(flat));
    }
  }
  for (const auto& w : warm_starts)
    if (w.size() == nu) starts.push_back(w);
  if (starts.empty()) throw std::invalid_argument("solve_point: no starting points");

  auto score = [&prob](const Eigen::VectorXd& u, bool converged) {
    detail::Candidate c;
    c.u = u;
    prob.roll(u);
    c.value = prob.true_value(c.k_star);
    c.violation = prob.violation();
    c.converged = converged;
    return c;
  };

  detail::Candidate best;
  bool have_best = false;
  int runs = 0;
  for (const auto& s0 : starts) {
    Eigen::VectorXd u = s0;
    bool conv = false;
    for (double mu : opts.mu_rounds) {
      conv = detail::minimize_round(prob, ubox, mu, opts.max_iters, opts, u);
      prob.roll(u);
      if (conv && prob.violation() == 0.0) break;  // feasible and settled
    }
    ++runs;
    // both endpoints of the run are searched points; keep the better
    detail::Candidate c_end = score(u, conv);
    detail::Candidate c_seed = score(s0, conv);
    detail::Candidate& c = detail::better_candidate(c_end, c_seed) ? c_end : c_seed;
    if (!have_best || detail::better_candidate(c, best)) {
      best = c;
      have_best = true;
    }
  }

  PointSolve out;
  out.x0 = x0;
  out.restarts_used = runs;
  out.converged = best.converged;
  out.k_star = best.k_star;
  out.value = best.value;
  out.terminal_violation = best.violation;
  out.feasible = best.violation == 0.0;
  out.u_star.resize(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k)
    out.u_star[static_cast<std::size_t>(k)] = best.u.segment(static_cast<Eigen::Index>(k) * m, m);
  prob.roll(best.u);
  out.x_star = prob.xs;
  return out;
}

// Re-polish from a single supplied control sequence, no builtin restarts.
inline PointSolve solve_point_warm_only(const SynthesisSpec& spec, const ControlSystem& sys,
                                        const ConstraintField& field, const InvariantSubset& sub,
                                        const Vec& x0, const Eigen::VectorXd& warm,
                                        const SolverOptions& opts = {}) {
  SolverOptions o = opts;
  o.builtin_starts = false;
  return solve_point(spec, sys, field, sub, x0, 0, {warm}, o);
}

}  // namespace cbf
