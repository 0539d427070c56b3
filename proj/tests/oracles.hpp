// Independent reference implementations used only by tests. Everything here
// is deliberately brute-force: exhaustive search, fine-step integration,
// finite differences, bisection. No test oracle reuses solver internals.
#pragma once

#include <functional>
#include <stdexcept>

#include "cbf/cbf.hpp"

namespace oracle {

using cbf::Vec;

struct MaxMinResult {
  double value = -std::numeric_limits<double>::infinity();
  bool feasible = false;
  std::size_t nodes_expanded = 0;
};

namespace detail {

struct DfsState {
  const cbf::SynthesisSpec* spec;
  const cbf::ControlSystem* sys;
  const cbf::ConstraintField* field;
  const cbf::InvariantSubset* sub;
  std::vector<Vec> candidates;  // per-step input set
  double h_rate_max;            // bound on d h / dt along any trajectory
  double best;
  bool found;
  std::size_t budget;
  std::size_t expanded = 0;
};

inline void dfs(DfsState& st, const Vec& x, int k, double running_min, bool reached) {
  const auto& spec = *st.spec;
  if (++st.expanded > st.budget) throw std::runtime_error("oracle: node budget exceeded");
  const int N = spec.steps;
  const double dt = spec.dt();
  if (k == N) {
    const bool ok = spec.terminal_mode == cbf::TerminalMode::AnyTime
                        ? reached
                        : cbf::f_member(*st.sub, *st.field, x);
    if (ok && (!st.found || running_min > st.best)) {
      st.best = running_min;
      st.found = true;
    }
    return;
  }
  // value bound: future min never exceeds the running min
  if (st.found && running_min <= st.best) return;
  // terminal reachability bound: the F-margin moves at most h_rate_max per
  // unit time, so a deficit larger than the remaining travel is fatal
  if (!(spec.terminal_mode == cbf::TerminalMode::AnyTime && reached)) {
    const double max_future_margin =
        cbf::f_margin(*st.sub, *st.field, x) + st.h_rate_max * dt * (N - k);
    if (max_future_margin < 0.0) return;
  }

  // expand children best-h-first
  std::vector<std::pair<double, std::size_t>> order;
  std::vector<Vec> nexts(st.candidates.size());
  for (std::size_t c = 0; c < st.candidates.size(); ++c) {
    nexts[c] = cbf::rk4_step(*st.sys, x, st.candidates[c], dt);
    order.emplace_back(cbf::h_eval(*st.field, nexts[c]), c);
  }
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [hn, c] : order) {
    const double decayed = hn - spec.gamma * (k + 1) * dt;
    dfs(st, nexts[c], k + 1, std::min(running_min, decayed),
        reached || cbf::f_member(*st.sub, *st.field, nexts[c]));
  }
}

}  // namespace detail

// Exhaustive max-min over a per-step lattice of `per_dim` values per input
// dimension (gamma variant only). h_rate_max must upper-bound |dh/dt|.
inline MaxMinResult exhaustive_max_min(const cbf::SynthesisSpec& spec,
                                       const cbf::ControlSystem& sys,
                                       const cbf::ConstraintField& field,
                                       const cbf::InvariantSubset& sub, const Vec& x0,
                                       int per_dim, double h_rate_max,
                                       std::size_t budget = 200u * 1000u * 1000u) {
  detail::DfsState st;
  st.spec = &spec;
  st.sys = &sys;
  st.field = &field;
  st.sub = &sub;
  st.h_rate_max = h_rate_max;
  st.best = -std::numeric_limits<double>::infinity();
  st.found = false;
  st.budget = budget;

  const int m = sys.input_dim;
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  for (;;) {
    Vec u(m);
    for (int j = 0; j < m; ++j) {
      const double fr = per_dim == 1 ? 0.5
                                     : static_cast<double>(idx[static_cast<std::size_t>(j)]) /
                                           (per_dim - 1);
      u[j] = sys.input_box.lo[j] + fr * (sys.input_box.hi[j] - sys.input_box.lo[j]);
    }
    st.candidates.push_back(u);
    int j = m - 1;
    while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == per_dim)
      idx[static_cast<std::size_t>(j--)] = 0;
    if (j < 0) break;
  }

  const double h0 = cbf::h_eval(field, x0);
  detail::dfs(st, x0, 0, h0, cbf::f_member(sub, field, x0));
  MaxMinResult r;
  r.value = st.best;
  r.feasible = st.found;
  r.nodes_expanded = st.expanded;
  return r;
}

// Reference integration: the same RK4 scheme on a much finer substep.
inline Vec fine_step(const cbf::ControlSystem& sys, const Vec& x, const Vec& u, double dt,
                     int substeps = 256) {
  Vec y = x;
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) y = cbf::rk4_step(sys, y, u, h);
  return y;
}

// Central-difference gradient of an arbitrary scalar function.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double step = 1e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double s = step * std::max(1.0, std::abs(x[i]));
    p[i] = x[i] + s;
    const double fp = f(p);
    p[i] = x[i] - s;
    const double fm = f(p);
    p[i] = x[i];
    g[i] = (fp - fm) / (2.0 * s);
  }
  return g;
}

// Exact projection of ub onto {u in box : a.u >= b} under the Euclidean
// metric: u(t) = clamp(ub + t a) with the smallest dual t >= 0 activating the
// halfspace; a.u(t) is nondecreasing in t, so bisection is exact.
struct BoxHalfspaceResult {
  Vec u;
  bool feasible = true;
};

inline BoxHalfspaceResult project_box_halfspace(const Vec& ub, const Vec& a, double b,
                                                const cbf::Box& box) {
  BoxHalfspaceResult r;
  const auto u_of = [&](double t) { return box.clamp(Vec(ub + t * a)); };
  r.u = u_of(0.0);
  if (a.dot(r.u) >= b) return r;
  double lo = 0.0, hi = 1.0;
  while (a.dot(u_of(hi)) < b) {
    hi *= 2.0;
    if (hi > 1e12) {
      // even the best corner misses the halfspace
      r.u = u_of(1e12);
      r.feasible = false;
      return r;
    }
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (a.dot(u_of(mid)) >= b)
      hi = mid;
    else
      lo = mid;
  }
  r.u = u_of(hi);
  return r;
}

}  // namespace oracle
