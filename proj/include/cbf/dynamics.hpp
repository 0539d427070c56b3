#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cbf/types.hpp"

namespace cbf {

enum class ModelKind { SingleIntegrator, DoubleIntegrator, Bicycle, Unicycle };

struct BicycleParams {
  double wheelbase = 1.0;
  double v_min = 1.0;
  double v_max = 2.0;
  double zeta_max = 20.0 * M_PI / 180.0;  // steering limit, rad
};

// Continuous-time control-affine plant with box input set and analytic Jacobians.
struct ControlSystem {
  ModelKind kind = ModelKind::SingleIntegrator;
  std::string id = "single_integrator";
  int state_dim = 2;
  int input_dim = 2;
  Box input_box;
  BicycleParams bike;  // used by Bicycle only
};

inline ControlSystem single_integrator(Box u_box) {
  ControlSystem s;
  s.kind = ModelKind::SingleIntegrator;
  s.id = "single_integrator";
  s.state_dim = 2;
  s.input_dim = u_box.dim();
  if (s.input_dim != 2) throw std::invalid_argument("single_integrator: input box must be 2-d");
  s.input_box = std::move(u_box);
  return s;
}

inline ControlSystem single_integrator() { return single_integrator(make_box({-2, -2}, {2, 2})); }

inline ControlSystem double_integrator(Box u_box) {
  ControlSystem s;
  s.kind = ModelKind::DoubleIntegrator;
  s.id = "double_integrator";
  s.state_dim = 4;
  s.input_dim = u_box.dim();
  if (s.input_dim != 2) throw std::invalid_argument("double_integrator: input box must be 2-d");
  s.input_box = std::move(u_box);
  return s;
}

inline ControlSystem double_integrator() { return double_integrator(make_box({-1, -1}, {1, 1})); }

// Rear-axle kinematic bicycle; slip angle beta = arctan(tan(zeta)/2), u = (v, zeta).
inline ControlSystem kinematic_bicycle(BicycleParams p) {
  ControlSystem s;
  s.kind = ModelKind::Bicycle;
  s.id = "kinematic_bicycle";
  s.state_dim = 3;
  s.input_dim = 2;
  s.bike = p;
  s.input_box.lo = make_vec({p.v_min, -p.zeta_max});
  s.input_box.hi = make_vec({p.v_max, p.zeta_max});
  return s;
}

inline ControlSystem kinematic_bicycle() { return kinematic_bicycle(BicycleParams{}); }

// u = (omega, v): heading rate first, forward speed second.
inline ControlSystem unicycle(Box u_box) {
  ControlSystem s;
  s.kind = ModelKind::Unicycle;
  s.id = "unicycle";
  s.state_dim = 3;
  s.input_dim = 2;
  if (u_box.dim() != 2) throw std::invalid_argument("unicycle: input box must be 2-d");
  s.input_box = std::move(u_box);
  return s;
}

inline ControlSystem unicycle() { return unicycle(make_box({-0.9, 1.0}, {0.9, 2.0})); }

// Tightest circle the bicycle can track at full steering lock.
inline double turning_radius(const BicycleParams& p) {
  if (!(p.zeta_max > 0.0)) throw std::invalid_argument("turning_radius: zeta_max must be positive");
  const double beta = std::atan(0.5 * std::tan(p.zeta_max));
  return p.wheelbase / (std::cos(beta) * std::tan(p.zeta_max));
}

namespace detail {
inline void check_dims(const ControlSystem& sys, const Vec& x, const Vec& u) {
  if (x.size() != sys.state_dim) throw std::invalid_argument(sys.id + ": state dim mismatch");
  if (u.size() != sys.input_dim) throw std::invalid_argument(sys.id + ": input dim mismatch");
}
}  // namespace detail

inline void eval_f_into(const ControlSystem& sys, const Vec& x, const Vec& u, Vec& dx) {
  dx.resize(sys.state_dim);
  switch (sys.kind) {
    case ModelKind::SingleIntegrator:
      dx[0] = u[0];
      dx[1] = u[1];
      break;
    case ModelKind::DoubleIntegrator:
      dx[0] = x[2];
      dx[1] = x[3];
      dx[2] = u[0];
      dx[3] = u[1];
      break;
    case ModelKind::Bicycle: {
      const double v = u[0], zeta = u[1];
      const double beta = std::atan(0.5 * std::tan(zeta));
      const double a = x[2] + beta;
      dx[0] = v * std::cos(a);
      dx[1] = v * std::sin(a);
      dx[2] = v * std::cos(beta) * std::tan(zeta) / sys.bike.wheelbase;
      break;
    }
    case ModelKind::Unicycle: {
      const double omega = u[0], v = u[1];
      dx[0] = v * std::cos(x[2]);
      dx[1] = v * std::sin(x[2]);
      dx[2] = omega;
      break;
    }
  }
}

inline Vec eval_f(const ControlSystem& sys, const Vec& x, const Vec& u) {
  detail::check_dims(sys, x, u);
  Vec dx;
  eval_f_into(sys, x, u, dx);
  return dx;
}

// fx = df/dx, fu = df/du at (x, u).
inline void eval_jacobians(const ControlSystem& sys, const Vec& x, const Vec& u, Mat& fx, Mat& fu) {
  const int n = sys.state_dim, m = sys.input_dim;
  fx.setZero(n, n);
  fu.setZero(n, m);
  switch (sys.kind) {
    case ModelKind::SingleIntegrator:
      fu(0, 0) = 1.0;
      fu(1, 1) = 1.0;
      break;
    case ModelKind::DoubleIntegrator:
      fx(0, 2) = 1.0;
      fx(1, 3) = 1.0;
      fu(2, 0) = 1.0;
      fu(3, 1) = 1.0;
      break;
    case ModelKind::Bicycle: {
      const double v = u[0], zeta = u[1];
      const double tz = std::tan(zeta);
      const double sec2 = 1.0 + tz * tz;
      const double beta = std::atan(0.5 * tz);
      const double dbeta = 0.5 * sec2 / (1.0 + 0.25 * tz * tz);
      const double a = x[2] + beta;
      const double ca = std::cos(a), sa = std::sin(a);
      const double cb = std::cos(beta), sb = std::sin(beta);
      const double L = sys.bike.wheelbase;
      fx(0, 2) = -v * sa;
      fx(1, 2) = v * ca;
      fu(0, 0) = ca;
      fu(1, 0) = sa;
      fu(2, 0) = cb * tz / L;
      fu(0, 1) = -v * sa * dbeta;
      fu(1, 1) = v * ca * dbeta;
      fu(2, 1) = v * (cb * sec2 - sb * dbeta * tz) / L;
      break;
    }
    case ModelKind::Unicycle: {
      const double v = u[1];
      const double c = std::cos(x[2]), s = std::sin(x[2]);
      fx(0, 2) = -v * s;
      fx(1, 2) = v * c;
      fu(0, 1) = c;
      fu(1, 1) = s;
      fu(2, 0) = 1.0;
      break;
    }
  }
}

// Fixed integration scheme for synthesis and simulation.
struct DiscreteStepper {
  double dt = 0.1;
};

namespace detail {
// Forward stage points a1..a4 of one RK4 step. Returns x_next.
inline Vec rk4_stages(const ControlSystem& sys, const Vec& x, const Vec& u, double dt,
                      Vec stage_x[4], Vec stage_k[4]) {
  stage_x[0] = x;
  eval_f_into(sys, stage_x[0], u, stage_k[0]);
  stage_x[1] = x + (0.5 * dt) * stage_k[0];
  eval_f_into(sys, stage_x[1], u, stage_k[1]);
  stage_x[2] = x + (0.5 * dt) * stage_k[1];
  eval_f_into(sys, stage_x[2], u, stage_k[2]);
  stage_x[3] = x + dt * stage_k[2];
  eval_f_into(sys, stage_x[3], u, stage_k[3]);
  return x + (dt / 6.0) * (stage_k[0] + 2.0 * stage_k[1] + 2.0 * stage_k[2] + stage_k[3]);
}
}  // namespace detail

inline Vec rk4_step(const ControlSystem& sys, const Vec& x, const Vec& u, double dt) {
  detail::check_dims(sys, x, u);
  Vec sx[4], sk[4];
  Vec next = detail::rk4_stages(sys, x, u, dt, sx, sk);
  for (int s = 0; s < 4; ++s)
    if (!sk[s].allFinite())
      throw std::runtime_error("rk4_step: non-finite stage k" + std::to_string(s + 1));
  return next;
}

// Accumulates (d x_next / d x)^T * xbar_next and (d x_next / d u)^T * xbar_next.
// xbar is overwritten, ubar is overwritten.
inline void rk4_vjp(const ControlSystem& sys, const Vec& x, const Vec& u, double dt,
                    const Vec& xbar_next, Vec& xbar, Vec& ubar) {
  Vec sx[4], sk[4];
  detail::rk4_stages(sys, x, u, dt, sx, sk);

  Mat fx, fu;
  Vec kbar[4];
  kbar[0] = (dt / 6.0) * xbar_next;
  kbar[1] = (dt / 3.0) * xbar_next;
  kbar[2] = (dt / 3.0) * xbar_next;
  kbar[3] = (dt / 6.0) * xbar_next;

  xbar = xbar_next;
  ubar.setZero(sys.input_dim);

  // Reverse through stages: a4 = x + dt k3, a3 = x + dt/2 k2, a2 = x + dt/2 k1, a1 = x.
  eval_jacobians(sys, sx[3], u, fx, fu);
  Vec abar = fx.transpose() * kbar[3];
  ubar += fu.transpose() * kbar[3];
  xbar += abar;
  kbar[2] += dt * abar;

  eval_jacobians(sys, sx[2], u, fx, fu);
  abar = fx.transpose() * kbar[2];
  ubar += fu.transpose() * kbar[2];
  xbar += abar;
  kbar[1] += (0.5 * dt) * abar;

  eval_jacobians(sys, sx[1], u, fx, fu);
  abar = fx.transpose() * kbar[1];
  ubar += fu.transpose() * kbar[1];
  xbar += abar;
  kbar[0] += (0.5 * dt) * abar;

  eval_jacobians(sys, sx[0], u, fx, fu);
  xbar += fx.transpose() * kbar[0];
  ubar += fu.transpose() * kbar[0];
}

// States x[0..N] under zero-order-hold inputs u[0..N-1].
inline std::vector<Vec> rollout(const ControlSystem& sys, const DiscreteStepper& stepper,
                                const Vec& x0, const std::vector<Vec>& u_seq) {
  std::vector<Vec> xs(u_seq.size() + 1);
  xs[0] = x0;
  for (std::size_t k = 0; k < u_seq.size(); ++k) {
    xs[k + 1] = rk4_step(sys, xs[k], u_seq[k], stepper.dt);
    if (!xs[k + 1].allFinite())
      throw std::runtime_error("rollout: non-finite state at step " + std::to_string(k + 1));
  }
  return xs;
}

}  // namespace cbf
