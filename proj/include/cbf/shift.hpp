#pragma once

#include <cmath>

#include "cbf/classk.hpp"
#include "cbf/grid.hpp"

namespace cbf {

enum class ShiftKind { Constant, SinusoidAbs };

// Time-varying shift lambda(t). The sinusoid family is
//   lambda(t) = -r_max * |sin(pi t / tau_p - sigma)| + r,   r_max <= r,
// so lambda stays in [r - r_max, r].
struct ShiftSchedule {
  ShiftKind kind = ShiftKind::Constant;
  double lambda0 = 0.0;  // constant kind
  double r = 0.0;
  double r_max = 0.0;
  double tau_p = 1.0;
  double sigma_shift = 0.0;
};

inline ShiftSchedule constant_shift(double lambda0) {
  ShiftSchedule s;
  s.kind = ShiftKind::Constant;
  s.lambda0 = lambda0;
  return s;
}

inline ShiftSchedule sinusoid_shift(double r, double r_max, double tau_p, double sigma = 0.0) {
  ShiftSchedule s;
  s.kind = ShiftKind::SinusoidAbs;
  s.r = r;
  s.r_max = r_max;
  s.tau_p = tau_p;
  s.sigma_shift = sigma;
  return s;
}

inline double lambda_eval(const ShiftSchedule& s, double t) {
  if (s.kind == ShiftKind::Constant) return s.lambda0;
  return -s.r_max * std::abs(std::sin(M_PI * t / s.tau_p - s.sigma_shift)) + s.r;
}

// Analytic derivative; at kinks of |sin| returns the lesser one-sided value
// (-r_max*pi/tau_p), so certificates built on it are sound.
inline double lambda_dot(const ShiftSchedule& s, double t) {
  if (s.kind == ShiftKind::Constant) return 0.0;
  const double rate = M_PI / s.tau_p;
  const double g = rate * t - s.sigma_shift;
  const double cycles = g / M_PI;  // kinks sit at integer values
  if (std::abs(cycles - std::round(cycles)) < 1e-9) return -s.r_max * rate;
  const double sg = std::sin(g);
  return -s.r_max * rate * std::cos(g) * (sg > 0.0 ? 1.0 : -1.0);
}

// Kink instants of |sin(pi t/tau_p - sigma)| inside [0, horizon]:
// t = (sigma + j*pi) * tau_p / pi.
inline std::vector<double> shift_kinks(const ShiftSchedule& s, double horizon) {
  std::vector<double> ks;
  if (s.kind != ShiftKind::SinusoidAbs) return ks;
  const double stride = s.tau_p;  // kink spacing in t
  const double t0 = s.sigma_shift * s.tau_p / M_PI;
  const long j_lo = static_cast<long>(std::ceil((0.0 - t0) / stride - 1e-12));
  const long j_hi = static_cast<long>(std::floor((horizon - t0) / stride + 1e-12));
  for (long j = j_lo; j <= j_hi; ++j) {
    const double t = t0 + stride * static_cast<double>(j);
    if (t >= -1e-12 && t <= horizon + 1e-12) ks.push_back(std::min(std::max(t, 0.0), horizon));
  }
  return ks;
}

struct ShiftReport {
  bool pass = false;
  bool amplitude_ok = true;    // r_max <= r field invariant
  bool bounds_ok = true;       // lambda(t) in [0, capital_lambda]
  bool certificate_ok = true;  // lambda_dot(t) >= alpha(-lambda(t))
  double margin = std::numeric_limits<double>::infinity();  // pointwise min of dot - alpha
  double worst_t = 0.0;
  // decoupled lower bound: (min over t of dot) - (max over t of alpha(-lambda));
  // never exceeds `margin`, so it is a sound conservative summary
  double conservative_margin = std::numeric_limits<double>::infinity();
  double worst_lambda = 0.0;
  std::size_t samples = 0;
  std::vector<double> kink_instants;

  std::string summary() const {
    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "%s margin=%.6g at t=%.6g (conservative %.6g), lambda range ok=%d, kinks=%zu",
                  pass ? "PASS" : "FAIL", margin, worst_t, conservative_margin,
                  static_cast<int>(bounds_ok), kink_instants.size());
    return buf;
  }
};

// Numeric shiftability certificate: samples t over [0, horizon] at >= 1e4
// points plus every kink instant and checks
//   lambda(t) in [0, capital_lambda]  and  lambda_dot(t) >= alpha(-lambda(t)).
inline ShiftReport check_shiftable(const ShiftSchedule& s, const ClassKe& alpha,
                                   const ShiftBound& bound, double horizon) {
  ShiftReport rep;
  rep.kink_instants = shift_kinks(s, horizon);
  if (s.kind == ShiftKind::SinusoidAbs && !(s.r_max <= s.r)) rep.amplitude_ok = false;

  std::vector<double> ts;
  const int n_dense = 10000;
  ts.reserve(static_cast<std::size_t>(n_dense) + rep.kink_instants.size() + 1);
  for (int i = 0; i <= n_dense; ++i)
    ts.push_back(horizon * static_cast<double>(i) / static_cast<double>(n_dense));
  ts.insert(ts.end(), rep.kink_instants.begin(), rep.kink_instants.end());

  double min_dot = std::numeric_limits<double>::infinity();
  double max_alpha = -std::numeric_limits<double>::infinity();
  for (double t : ts) {
    const double lam = lambda_eval(s, t);
    const double dot = lambda_dot(s, t);
    const double a = alpha_eval(alpha, -lam);
    if (lam < -1e-12 || lam > bound.capital_lambda + 1e-12) rep.bounds_ok = false;
    const double m = dot - a;
    if (m < rep.margin) {
      rep.margin = m;
      rep.worst_t = t;
      rep.worst_lambda = lam;
    }
    min_dot = std::min(min_dot, dot);
    max_alpha = std::max(max_alpha, a);
  }
  rep.samples = ts.size();
  rep.conservative_margin = min_dot - max_alpha;
  rep.certificate_ok = rep.margin >= 0.0;
  rep.pass = rep.amplitude_ok && rep.bounds_ok && rep.certificate_ok;
  return rep;
}

// Shifted barrier value H(x) + lambda(t); throws as interpolate off-domain.
inline double shifted_value(const CbfGrid& grid, const ShiftSchedule& s, double t, const Vec& x) {
  return interpolate(grid, x) + lambda_eval(s, t);
}

inline void to_json(json& j, const ShiftSchedule& s) {
  if (s.kind == ShiftKind::Constant) {
    j = json{{"kind", "constant"}, {"value", s.lambda0}};
  } else {
    j = json{{"kind", "sinusoid_abs"},
             {"r", s.r},
             {"r_max", s.r_max},
             {"tau_p", s.tau_p},
             {"sigma", s.sigma_shift}};
  }
}

inline void from_json(const json& j, ShiftSchedule& s) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    s.kind = ShiftKind::Constant;
    s.lambda0 = j.at("value").get<double>();
  } else if (kind == "sinusoid_abs") {
    s.kind = ShiftKind::SinusoidAbs;
    s.r = j.at("r").get<double>();
    s.r_max = j.at("r_max").get<double>();
    s.tau_p = j.at("tau_p").get<double>();
    s.sigma_shift = j.value("sigma", 0.0);
  } else {
    throw std::invalid_argument("shift: unknown kind '" + kind + "'");
  }
}

}  // namespace cbf
