#pragma once

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "cbf/shift.hpp"

namespace cbf {

struct FilterConfig {
  Mat P;  // input-deviation weight, symmetric positive-definite; empty = identity
  double c_alpha = 0.0;
  int input_candidates = 21;  // dense-pass lattice points per input dimension
  std::optional<double> sigma_dini;
};

inline Mat filter_weight(const FilterConfig& cfg, int m) {
  if (cfg.P.size() == 0) return Mat::Identity(m, m);
  if (cfg.P.rows() != m || cfg.P.cols() != m)
    throw std::invalid_argument("filter: P dimension mismatch");
  if (!cfg.P.isApprox(cfg.P.transpose(), 1e-12))
    throw std::invalid_argument("filter: P not symmetric");
  Eigen::LLT<Mat> llt(cfg.P);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("filter: P not positive-definite");
  return cfg.P;
}

// One barrier constraint: a synthesized grid plus its shift schedule. The
// comparison function is rebuilt from the grid's stored synthesis parameters.
struct ObstacleCbf {
  const CbfGrid* grid = nullptr;
  ShiftSchedule schedule;

  ClassKe alpha() const { return ClassKe{grid->meta.spec.c, grid->meta.spec.gamma}; }
};

struct LineTarget {
  Vec point = Vec::Zero(2);   // any point on the line
  Vec dir = make_vec({1, 0});  // unit direction of travel
  double cruise = 1.0;
};

struct BaselineGains {
  double k_p = 1.0;        // cross-track gain
  double k_v = 2.0;        // velocity-tracking gain (double integrator)
  double lookahead = 2.0;  // pure-pursuit lookahead distance
  double k_heading = 2.0;  // heading gain (bicycle/unicycle)
};

namespace detail {

inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

}  // namespace detail

// Line-tracking baseline: saturated P/PD law for the integrators, pure
// pursuit with mid-range speed for bicycle/unicycle. Output is clamped to
// the input box.
inline Vec baseline_input(const ControlSystem& sys, const Vec& x, const LineTarget& line,
                          const BaselineGains& g = {}) {
  const Vec d = line.dir / line.dir.norm();
  const double nx = -d[1], ny = d[0];  // left normal
  const double ex = x[0] - line.point[0], ey = x[1] - line.point[1];
  const double perp = ex * nx + ey * ny;
  Vec u(sys.input_dim);
  switch (sys.kind) {
    case ModelKind::SingleIntegrator: {
      u[0] = line.cruise * d[0] - g.k_p * perp * nx;
      u[1] = line.cruise * d[1] - g.k_p * perp * ny;
      break;
    }
    case ModelKind::DoubleIntegrator: {
      const double vdx = line.cruise * d[0] - g.k_p * perp * nx;
      const double vdy = line.cruise * d[1] - g.k_p * perp * ny;
      u[0] = g.k_v * (vdx - x[2]);
      u[1] = g.k_v * (vdy - x[3]);
      break;
    }
    case ModelKind::Bicycle: {
      const double along = ex * d[0] + ey * d[1];
      const double lx = line.point[0] + (along + g.lookahead) * d[0];
      const double ly = line.point[1] + (along + g.lookahead) * d[1];
      const double epsi = detail::wrap_angle(std::atan2(ly - x[1], lx - x[0]) - x[2]);
      u[0] = 0.5 * (sys.input_box.lo[0] + sys.input_box.hi[0]);  // speed mid-range
      u[1] = g.k_heading * epsi;
      break;
    }
    case ModelKind::Unicycle: {
      const double along = ex * d[0] + ey * d[1];
      const double lx = line.point[0] + (along + g.lookahead) * d[0];
      const double ly = line.point[1] + (along + g.lookahead) * d[1];
      const double epsi = detail::wrap_angle(std::atan2(ly - x[1], lx - x[0]) - x[2]);
      u[0] = g.k_heading * epsi;
      u[1] = 0.5 * (sys.input_box.lo[1] + sys.input_box.hi[1]);  // speed mid-range
      break;
    }
  }
  return sys.input_box.clamp(u);
}

struct SafeInputResult {
  Vec u;
  bool feasible = true;          // some input satisfied every constraint
  bool clamped = false;          // a grid query left the domain
  bool touched_infeasible = false;
  double worst_residual = std::numeric_limits<double>::infinity();
  std::vector<bool> active;      // per obstacle: constraint violated at u_base
};

namespace detail {

struct FilterContext {
  const ControlSystem* sys;
  const std::vector<ObstacleCbf>* obstacles;
  const FilterConfig* cfg;
  double t;
  Vec x;
  // per obstacle, fixed at (t, x): alpha(H + lambda) + lambda_dot - c_alpha
  std::vector<double> rhs_offset;
  bool clamped = false;
  bool touched_infeasible = false;
  mutable Vec f;

  // min over obstacles of the ascent residual at input u; >= 0 means feasible
  double min_residual(const Vec& u) {
    eval_f_into(*sys, x, u, f);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < obstacles->size(); ++i) {
      const auto& ob = (*obstacles)[i];
      const double dd = dini_directional_clamped(*ob.grid, x, f, cfg->sigma_dini, &clamped,
                                                 &touched_infeasible);
      worst = std::min(worst, dd + rhs_offset[i]);
    }
    return worst;
  }
};

// Exact minimizer of (u - ub)' P (u - ub) over {g.u >= beta} intersected with
// the box, by enumerating active sets (each coordinate free / at lo / at hi,
// halfspace tight or slack) and keeping the cheapest primal-feasible
// stationary point. The optimum solves the stationarity system of its own
// pattern, so no dual checks are needed. Intended for small input dimensions.
inline bool solve_box_halfspace_qp(const Mat& P, const Vec& ub, const Vec& g, double beta,
                                   const Box& box, Vec& out) {
  const int m = static_cast<int>(ub.size());
  double scale = 1.0;
  for (int j = 0; j < m; ++j)
    scale = std::max({scale, std::abs(box.lo[j]), std::abs(box.hi[j])});
  const double tol = 1e-9 * scale;

  bool found = false;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> state(static_cast<std::size_t>(m), 0);  // 0 free, 1 at lo, 2 at hi
  Vec u(m);
  for (;;) {
    for (int tight = 0; tight < 2; ++tight) {
      std::vector<int> fr;
      for (int j = 0; j < m; ++j) {
        if (state[static_cast<std::size_t>(j)] == 0)
          fr.push_back(j);
        else
          u[j] = state[static_cast<std::size_t>(j)] == 1 ? box.lo[j] : box.hi[j];
      }
      const int nf = static_cast<int>(fr.size());
      const int dim = nf + tight;
      if (tight == 1 && nf == 0) continue;  // covered by the slack pattern
      if (dim > 0) {
        // unknowns z = [u_free; lambda]; rows: stationarity on free coords,
        // then the tight halfspace
        Mat K = Mat::Zero(dim, dim);
        Vec rhs = Vec::Zero(dim);
        for (int r = 0; r < nf; ++r) {
          const int jr = fr[static_cast<std::size_t>(r)];
          double b = 0.0;
          for (int j = 0; j < m; ++j) {
            b += 2.0 * P(jr, j) * ub[j];
            if (state[static_cast<std::size_t>(j)] != 0) b -= 2.0 * P(jr, j) * u[j];
          }
          for (int c2 = 0; c2 < nf; ++c2) K(r, c2) = 2.0 * P(jr, fr[static_cast<std::size_t>(c2)]);
          if (tight) K(r, nf) = -g[jr];
          rhs[r] = b;
        }
        if (tight) {
          double b = beta;
          for (int j = 0; j < m; ++j)
            if (state[static_cast<std::size_t>(j)] != 0) b -= g[j] * u[j];
          for (int c2 = 0; c2 < nf; ++c2) K(nf, c2) = g[fr[static_cast<std::size_t>(c2)]];
          rhs[nf] = b;
        }
        Eigen::FullPivLU<Mat> lu(K);
        if (!lu.isInvertible()) continue;
        const Vec z = lu.solve(rhs);
        for (int r = 0; r < nf; ++r) u[fr[static_cast<std::size_t>(r)]] = z[r];
      }
      bool feas = true;
      for (int r = 0; r < nf && feas; ++r) {
        const int j = fr[static_cast<std::size_t>(r)];
        feas = u[j] >= box.lo[j] - tol && u[j] <= box.hi[j] + tol;
      }
      if (feas && !tight) feas = g.dot(u) >= beta - tol;
      if (!feas) continue;
      const Vec d = box.clamp(u) - ub;
      const double c = d.dot(P * d);
      if (!found || c < best) {
        found = true;
        best = c;
        out = box.clamp(u);
      }
    }
    int j = m - 1;
    while (j >= 0 && ++state[static_cast<std::size_t>(j)] == 3) state[static_cast<std::size_t>(j--)] = 0;
    if (j < 0) break;
  }
  return found;
}

}  // namespace detail

// Minimal-deviation safety filter. Projects u_base onto the set of inputs
// whose grid-interpolated barrier ascends fast enough for every obstacle:
//   dH(x; f(x,u)) + lambda_dot >= -alpha(H + lambda) + c_alpha.
// Dense lattice over the input box, shrinking-window dense refinement around
// the incumbent (handles constraints nonlinear in u), then a linearized
// projection polish. If nothing is feasible, returns the input maximizing
// the worst residual, flagged.
inline SafeInputResult safe_input(const FilterConfig& cfg, const ControlSystem& sys,
                                  const std::vector<ObstacleCbf>& obstacles, double t,
                                  const Vec& x, const Vec& u_base) {
  const int m = sys.input_dim;
  const Mat P = filter_weight(cfg, m);
  SafeInputResult out;
  out.u = u_base;
  out.active.assign(obstacles.size(), false);
  if (obstacles.empty()) return out;

  detail::FilterContext ctx;
  ctx.sys = &sys;
  ctx.obstacles = &obstacles;
  ctx.cfg = &cfg;
  ctx.t = t;
  ctx.x = x;
  ctx.f.resize(sys.state_dim);
  ctx.rhs_offset.resize(obstacles.size());
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const auto& ob = obstacles[i];
    const InterpResult H = interpolate_clamped(*ob.grid, x);
    ctx.clamped |= H.clamped;
    ctx.touched_infeasible |= H.touched_infeasible;
    const double lam = lambda_eval(ob.schedule, t);
    ctx.rhs_offset[i] =
        lambda_dot(ob.schedule, t) + alpha_eval(ob.alpha(), H.value + lam) - cfg.c_alpha;
  }

  // per-obstacle activity at the baseline input
  {
    eval_f_into(sys, x, u_base, ctx.f);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const double dd = dini_directional_clamped(*obstacles[i].grid, x, ctx.f, cfg.sigma_dini,
                                                 &ctx.clamped, &ctx.touched_infeasible);
      const double r = dd + ctx.rhs_offset[i];
      out.active[i] = r < 0.0;
      worst = std::min(worst, r);
    }
    if (worst >= 0.0) {  // baseline already safe: return it exactly
      out.worst_residual = worst;
      out.clamped = ctx.clamped;
      out.touched_infeasible = ctx.touched_infeasible;
      return out;
    }
  }

  const auto cost = [&](const Vec& u) {
    const Vec d = u - u_base;
    return d.dot(P * d);
  };

  Vec best_u = u_base;
  double best_cost = 0.0;
  double best_res = -std::numeric_limits<double>::infinity();
  bool have_feasible = false;
  const auto consider = [&](const Vec& u) {
    const double r = ctx.min_residual(u);
    if (r >= 0.0) {
      const double c = cost(u);
      if (!have_feasible || c < best_cost) {
        have_feasible = true;
        best_cost = c;
        best_res = r;
        best_u = u;
      }
    } else if (!have_feasible && r > best_res) {
      best_res = r;
      best_u = u;
    }
  };

  // dense pass
  const int nc = std::max(2, cfg.input_candidates);
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  Vec u(m);
  for (;;) {
    for (int j = 0; j < m; ++j) {
      const double fr = static_cast<double>(idx[static_cast<std::size_t>(j)]) / (nc - 1);
      u[j] = sys.input_box.lo[j] + fr * (sys.input_box.hi[j] - sys.input_box.lo[j]);
    }
    consider(u);
    int j = m - 1;
    while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == nc) idx[static_cast<std::size_t>(j--)] = 0;
    if (j < 0) break;
  }

  // shrinking-window refinement around the incumbent
  Vec width(m);
  for (int j = 0; j < m; ++j)
    width[j] = 3.0 * (sys.input_box.hi[j] - sys.input_box.lo[j]) / (nc - 1);
  const int lattice = 5, rounds = 16;
  for (int r = 0; r < rounds; ++r) {
    const Vec center = best_u;
    std::fill(idx.begin(), idx.end(), 0);
    for (;;) {
      for (int j = 0; j < m; ++j) {
        const double fr = static_cast<double>(idx[static_cast<std::size_t>(j)]) / (lattice - 1);
        u[j] = center[j] + width[j] * (fr - 0.5);
        u[j] = std::min(std::max(u[j], sys.input_box.lo[j]), sys.input_box.hi[j]);
      }
      consider(u);
      int j = m - 1;
      while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == lattice) idx[static_cast<std::size_t>(j--)] = 0;
      if (j < 0) break;
    }
    width *= 0.5;
  }

  // Polish: linearize the binding residual at the incumbent, solve the
  // resulting box-halfspace program exactly, and accept only verified-feasible
  // cost improvements. Pattern search can stall a percent or so short of the
  // projection when the active constraint cuts between lattice directions;
  // on residuals affine in u this lands on the exact minimizer.
  if (have_feasible) {
    double urange = 0.0;
    for (int j = 0; j < m; ++j) urange = std::max(urange, sys.input_box.hi[j] - sys.input_box.lo[j]);
    const double hstep = 1e-6 * std::max(1.0, urange);
    Vec gr(m), probe(m), cand(m), trial(m);
    for (int it = 0; it < 8; ++it) {
      const double r0 = ctx.min_residual(best_u);
      for (int j = 0; j < m; ++j) {
        probe = best_u;
        probe[j] += hstep;
        const double rp = ctx.min_residual(probe);
        probe[j] = best_u[j] - hstep;
        gr[j] = (rp - ctx.min_residual(probe)) / (2.0 * hstep);
      }
      if (!gr.allFinite() || gr.norm() < 1e-12) break;
      // tiny slack keeps the solution strictly inside, so the true-residual
      // acceptance below passes in one step when the linearization is exact
      const double beta = gr.dot(best_u) - r0 + 1e-9 * std::max(1.0, std::abs(r0));
      if (!detail::solve_box_halfspace_qp(P, u_base, gr, beta, sys.input_box, cand)) break;
      bool accepted = false;
      double step = 1.0;
      for (int bt = 0; bt < 6 && !accepted; ++bt, step *= 0.5) {
        trial = best_u + step * (cand - best_u);
        if (ctx.min_residual(trial) < 0.0) continue;
        const double c = cost(trial);
        if (c < best_cost - 1e-12 * std::max(1.0, best_cost)) {
          best_u = trial;
          best_cost = c;
          accepted = true;
        }
      }
      if (!accepted) break;
    }
  }

  out.u = best_u;
  out.feasible = have_feasible;
  out.worst_residual = have_feasible ? ctx.min_residual(best_u) : best_res;
  out.clamped = ctx.clamped;
  out.touched_infeasible = ctx.touched_infeasible;
  return out;
}

// Row flags: bit0 clamped grid query, bit1 interpolation touched an
// infeasible node, bit2 filter infeasible, bit 3+i obstacle i active.
struct SimRow {
  double t = 0.0;
  Vec x;
  Vec u_base;
  Vec u_safe;
  double h_shifted_min = 0.0;
  double lambda_min = 0.0;
  double h_min = 0.0;
  unsigned flags = 0;
};

struct SimLog {
  int state_dim = 0;
  int input_dim = 0;
  std::vector<SimRow> rows;
  std::string config_text;  // embedded as a CSV comment line when present
};

inline void log_row(SimLog& log, const std::vector<ObstacleCbf>& obstacles, double t,
                    const Vec& x, const Vec& ub, const SafeInputResult& sr) {
  SimRow row;
  row.t = t;
  row.x = x;
  row.u_base = ub;
  row.u_safe = sr.u;
  row.h_shifted_min = std::numeric_limits<double>::quiet_NaN();
  row.lambda_min = std::numeric_limits<double>::quiet_NaN();
  row.h_min = std::numeric_limits<double>::quiet_NaN();
  bool clamped = sr.clamped, touched = sr.touched_infeasible;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const auto& ob = obstacles[i];
    const InterpResult H = interpolate_clamped(*ob.grid, x);
    clamped |= H.clamped;
    touched |= H.touched_infeasible;
    const double lam = lambda_eval(ob.schedule, t);
    const double hs = H.value + lam;
    const double h = h_eval(ob.grid->meta.field, x);
    if (i == 0 || hs < row.h_shifted_min) row.h_shifted_min = hs;
    if (i == 0 || lam < row.lambda_min) row.lambda_min = lam;
    if (i == 0 || h < row.h_min) row.h_min = h;
  }
  row.flags = (clamped ? 1u : 0u) | (touched ? 2u : 0u) | (sr.feasible ? 0u : 4u);
  for (std::size_t i = 0; i < sr.active.size() && i < 28; ++i)
    if (sr.active[i]) row.flags |= 1u << (3 + i);
  log.rows.push_back(std::move(row));
}

// Fixed-step closed loop: baseline input, safety filter, RK4 step. States
// leaving the grid domain are clamped in queries and flagged; the run
// continues best-effort.
inline SimLog simulate(const ControlSystem& sys, double dt,
                       const std::vector<ObstacleCbf>& obstacles, const FilterConfig& cfg,
                       const Vec& x0, double t_end, const LineTarget& line,
                       const BaselineGains& gains = {}) {
  if (dt <= 0.0) throw std::invalid_argument("simulate: dt must be positive");
  if (t_end < 0.0) throw std::invalid_argument("simulate: t_end must be nonnegative");
  SimLog log;
  log.state_dim = sys.state_dim;
  log.input_dim = sys.input_dim;
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  log.rows.reserve(steps + 1);
  Vec x = x0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = dt * static_cast<double>(k);
    const Vec ub = baseline_input(sys, x, line, gains);
    const SafeInputResult sr = safe_input(cfg, sys, obstacles, t, x, ub);
    log_row(log, obstacles, t, x, ub, sr);
    if (k < steps) x = rk4_step(sys, x, sr.u, dt);
  }
  return log;
}

inline std::string sim_csv_header(int n, int m) {
  std::string h = "t";
  for (int i = 0; i < n; ++i) h += ",x" + std::to_string(i);
  for (int i = 0; i < m; ++i) h += ",ub" + std::to_string(i);
  for (int i = 0; i < m; ++i) h += ",us" + std::to_string(i);
  h += ",H_shifted_min,lambda_min,h_min,flags";
  return h;
}

inline void write_sim_csv(const SimLog& log, std::ostream& os) {
  if (!log.config_text.empty()) {
    // keep the embedded config on one comment line
    std::string one = log.config_text;
    for (char& c : one)
      if (c == '\n' || c == '\r') c = ' ';
    os << "# " << one << "\n";
  }
  os << sim_csv_header(log.state_dim, log.input_dim) << "\n";
  char num[64];
  const auto put = [&](double v, bool lead_comma = true) {
    std::snprintf(num, sizeof(num), "%.17g", v);
    if (lead_comma) os << ',';
    os << num;
  };
  for (const auto& r : log.rows) {
    put(r.t, false);
    for (int i = 0; i < log.state_dim; ++i) put(r.x[i]);
    for (int i = 0; i < log.input_dim; ++i) put(r.u_base[i]);
    for (int i = 0; i < log.input_dim; ++i) put(r.u_safe[i]);
    put(r.h_shifted_min);
    put(r.lambda_min);
    put(r.h_min);
    os << ',' << r.flags << "\n";
  }
}

inline void to_json(json& j, const FilterConfig& c) {
  j = json{{"c_alpha", c.c_alpha}, {"input_candidates", c.input_candidates}};
  if (c.sigma_dini) j["sigma_dini"] = *c.sigma_dini;
  if (c.P.size() != 0) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index r = 0; r < c.P.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index q = 0; q < c.P.cols(); ++q) row.push_back(c.P(r, q));
      rows.push_back(std::move(row));
    }
    j["P"] = rows;
  }
}

inline void from_json(const json& j, FilterConfig& c) {
  c.c_alpha = j.value("c_alpha", 0.0);
  c.input_candidates = j.value("input_candidates", 21);
  if (j.contains("sigma_dini")) c.sigma_dini = j.at("sigma_dini").get<double>();
  if (j.contains("P")) {
    const auto rows = j.at("P").get<std::vector<std::vector<double>>>();
    const auto nr = static_cast<Eigen::Index>(rows.size());
    c.P.resize(nr, nr);
    for (Eigen::Index r = 0; r < nr; ++r) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != nr)
        throw std::invalid_argument("filter: P must be square");
      for (Eigen::Index q = 0; q < nr; ++q)
        c.P(r, q) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(q)];
    }
  }
}

}  // namespace cbf
