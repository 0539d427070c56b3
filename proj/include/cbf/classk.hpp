#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cbf/constraint.hpp"
#include "cbf/types.hpp"

namespace cbf {

// Extended class-K function, linear on the safe side and sigmoid-saturating on
// the unsafe side with infimum -gamma_floor:
//   alpha(z) = c*z                                for z >= 0
//   alpha(z) = 2*gamma_floor*(sig(c*z/4) - 1/2)   for z <  0
struct ClassKe {
  double c = 1.0;
  double gamma_floor = 1.0;
};

inline double alpha_eval(const ClassKe& a, double z) {
  if (z >= 0.0) return a.c * z;
  const double s = 1.0 / (1.0 + std::exp(-a.c * z * 0.25));
  return 2.0 * a.gamma_floor * (s - 0.5);
}

inline double alpha_deriv(const ClassKe& a, double z) {
  if (z >= 0.0) return a.c;
  const double s = 1.0 / (1.0 + std::exp(-a.c * z * 0.25));
  return 2.0 * a.gamma_floor * s * (1.0 - s) * a.c * 0.25;
}

// Clipped variant used by the averaged-decay reformulation: zero on the safe side.
struct ClippedAlpha {
  ClassKe base;
};

inline double alpha_bar_eval(const ClippedAlpha& a, double z) {
  return z >= 0.0 ? 0.0 : alpha_eval(a.base, z);
}

inline double alpha_bar_deriv(const ClippedAlpha& a, double z) {
  return z >= 0.0 ? 0.0 : alpha_deriv(a.base, z);
}

struct ClassKeReport {
  bool monotone = true;
  bool zero_at_zero = true;
  bool bounded_below = true;
  // Diagnostic only: the branches join with slopes gamma_floor*c/8 and c, so
  // the function is convex iff gamma_floor <= 8. Nothing downstream needs it.
  bool convex = true;
  double worst_monotone_gap = std::numeric_limits<double>::infinity();  // min consecutive increase
  double worst_convexity_margin = std::numeric_limits<double>::infinity();  // min chord - value
  double lower_bound_slack = std::numeric_limits<double>::infinity();  // min alpha(z) + gamma_floor

  bool ok() const { return monotone && zero_at_zero && bounded_below; }
};

// Property check on a fixed ladder: 1000 log-spaced points per sign over
// |z| in [1e-6, 1e3], plus zero. Convexity is tested on consecutive triples.
inline ClassKeReport check_classke(const ClassKe& a) {
  std::vector<double> zs;
  zs.reserve(2001);
  const double lo = std::log(1e-6), hi = std::log(1e3);
  for (int i = 999; i >= 0; --i)
    zs.push_back(-std::exp(lo + (hi - lo) * static_cast<double>(i) / 999.0));
  zs.push_back(0.0);
  for (int i = 0; i < 1000; ++i)
    zs.push_back(std::exp(lo + (hi - lo) * static_cast<double>(i) / 999.0));

  ClassKeReport rep;
  rep.zero_at_zero = alpha_eval(a, 0.0) == 0.0;

  std::vector<double> vals(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) vals[i] = alpha_eval(a, zs[i]);

  // Float saturation flattens the sigmoid tail to exactly -gamma, so the
  // monotonicity and lower-bound checks are non-strict.
  for (std::size_t i = 0; i + 1 < zs.size(); ++i) {
    const double gap = vals[i + 1] - vals[i];
    rep.worst_monotone_gap = std::min(rep.worst_monotone_gap, gap);
    if (gap < 0.0) rep.monotone = false;
  }
  for (double v : vals) {
    rep.lower_bound_slack = std::min(rep.lower_bound_slack, v + a.gamma_floor);
    if (v < -a.gamma_floor) rep.bounded_below = false;
  }
  for (std::size_t i = 0; i + 2 < zs.size(); ++i) {
    const double t = (zs[i + 1] - zs[i]) / (zs[i + 2] - zs[i]);
    const double chord = vals[i] + t * (vals[i + 2] - vals[i]);
    const double margin = chord - vals[i + 1];
    rep.worst_convexity_margin = std::min(rep.worst_convexity_margin, margin);
    if (margin < -1e-9 * std::max(1.0, std::abs(chord))) rep.convex = false;
  }
  return rep;
}

}  // namespace cbf
