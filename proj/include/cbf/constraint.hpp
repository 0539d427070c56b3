#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cbf/types.hpp"

namespace cbf {

enum class FieldKind { Circle, ModifiedDoubleIntegrator, CompositeMin };

// Safety margin field h; the constraint set is {x : h(x) >= 0}.
// Circle: Euclidean distance of the position coordinates to a disk boundary.
// ModifiedDoubleIntegrator: eta * min{h_circle/eta, vbound +/- each velocity}.
// CompositeMin: pointwise min over children.
struct ConstraintField {
  FieldKind kind = FieldKind::Circle;
  double cx = 0.0;
  double cy = 0.0;
  double radius = 1.0;
  double eta = 1.0;    // ModifiedDoubleIntegrator scaling
  double vbound = 2.0; // ModifiedDoubleIntegrator velocity box half-width
  std::vector<ConstraintField> children;  // CompositeMin
};

inline ConstraintField circle_field(double cx, double cy, double radius) {
  ConstraintField f;
  f.kind = FieldKind::Circle;
  f.cx = cx;
  f.cy = cy;
  f.radius = radius;
  return f;
}

inline ConstraintField modified_double_integrator_field(double cx, double cy, double radius,
                                                        double eta, double vbound = 2.0) {
  ConstraintField f = circle_field(cx, cy, radius);
  f.kind = FieldKind::ModifiedDoubleIntegrator;
  f.eta = eta;
  f.vbound = vbound;
  return f;
}

inline ConstraintField composite_min_field(std::vector<ConstraintField> children) {
  if (children.empty()) throw std::invalid_argument("composite_min: needs at least one child");
  ConstraintField f;
  f.kind = FieldKind::CompositeMin;
  f.children = std::move(children);
  return f;
}

inline double h_eval(const ConstraintField& f, const Vec& x) {
  switch (f.kind) {
    case FieldKind::Circle: {
      const double dx = x[0] - f.cx, dy = x[1] - f.cy;
      return std::sqrt(dx * dx + dy * dy) - f.radius;
    }
    case FieldKind::ModifiedDoubleIntegrator: {
      if (x.size() < 4)
        throw std::invalid_argument("modified_double_integrator field needs a 4-d state");
      const double dx = x[0] - f.cx, dy = x[1] - f.cy;
      const double hp = (std::sqrt(dx * dx + dy * dy) - f.radius) / f.eta;
      double m = hp;
      m = std::min(m, f.vbound + x[2]);
      m = std::min(m, f.vbound + x[3]);
      m = std::min(m, f.vbound - x[2]);
      m = std::min(m, f.vbound - x[3]);
      return f.eta * m;
    }
    case FieldKind::CompositeMin: {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& c : f.children) m = std::min(m, h_eval(c, x));
      return m;
    }
  }
  return 0.0;
}

// Gradient of h w.r.t. the full state; subgradient selection at kinks
// (first active piece in evaluation order, zero vector at a circle center).
inline Vec h_grad(const ConstraintField& f, const Vec& x) {
  Vec g = Vec::Zero(x.size());
  switch (f.kind) {
    case FieldKind::Circle: {
      const double dx = x[0] - f.cx, dy = x[1] - f.cy;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d > 0.0) {
        g[0] = dx / d;
        g[1] = dy / d;
      }
      return g;
    }
    case FieldKind::ModifiedDoubleIntegrator: {
      const double dx = x[0] - f.cx, dy = x[1] - f.cy;
      const double d = std::sqrt(dx * dx + dy * dy);
      const double hp = (d - f.radius) / f.eta;
      const double pieces[5] = {hp, f.vbound + x[2], f.vbound + x[3], f.vbound - x[2],
                                f.vbound - x[3]};
      int arg = 0;
      for (int i = 1; i < 5; ++i)
        if (pieces[i] < pieces[arg]) arg = i;
      switch (arg) {
        case 0:
          if (d > 0.0) {
            g[0] = dx / d;
            g[1] = dy / d;
          }
          break;
        case 1: g[2] = f.eta; break;
        case 2: g[3] = f.eta; break;
        case 3: g[2] = -f.eta; break;
        case 4: g[3] = -f.eta; break;
      }
      return g;
    }
    case FieldKind::CompositeMin: {
      int arg = 0;
      double m = h_eval(f.children[0], x);
      for (std::size_t i = 1; i < f.children.size(); ++i) {
        const double v = h_eval(f.children[i], x);
        if (v < m) {
          m = v;
          arg = static_cast<int>(i);
        }
      }
      return h_grad(f.children[static_cast<std::size_t>(arg)], x);
    }
  }
  return g;
}

enum class SubsetKind { Superlevel, ErodedSuperlevel };

// Terminal target set F = {x : h(x) >= threshold}. For ErodedSuperlevel the
// threshold is delta + margin, resolved at construction; margin kept for metadata.
struct InvariantSubset {
  SubsetKind kind = SubsetKind::Superlevel;
  double threshold = 0.0;
  double margin = 0.0;
};

inline InvariantSubset superlevel_subset(double threshold) {
  InvariantSubset s;
  s.kind = SubsetKind::Superlevel;
  s.threshold = threshold;
  return s;
}

inline InvariantSubset eroded_subset(double delta, double margin) {
  if (margin < 0.0) throw std::invalid_argument("eroded subset: margin must be >= 0");
  InvariantSubset s;
  s.kind = SubsetKind::ErodedSuperlevel;
  s.threshold = delta + margin;
  s.margin = margin;
  return s;
}

// Signed margin to F; boundary counts as inside.
inline double f_margin(const InvariantSubset& s, const ConstraintField& f, const Vec& x) {
  return h_eval(f, x) - s.threshold;
}

inline bool f_member(const InvariantSubset& s, const ConstraintField& f, const Vec& x) {
  return f_margin(s, f, x) >= 0.0;
}

// Rectangular state domain with per-axis node counts and wrap flags.
struct DomainBox {
  Vec lo;
  Vec hi;
  std::vector<int> counts;
  std::vector<bool> wraps;

  int dim() const { return static_cast<int>(lo.size()); }
};

inline void validate_domain(const DomainBox& d) {
  const auto n = static_cast<std::size_t>(d.dim());
  if (static_cast<std::size_t>(d.hi.size()) != n || d.counts.size() != n || d.wraps.size() != n)
    throw std::invalid_argument("domain: inconsistent axis arrays");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(d.lo[static_cast<Eigen::Index>(i)] < d.hi[static_cast<Eigen::Index>(i)]))
      throw std::invalid_argument("domain: lo must be < hi per axis");
    if (d.counts[i] < 2) throw std::invalid_argument("domain: need >= 2 nodes per axis");
  }
}

enum class TerminalMode { AnyTime, AtFinalStep };
enum class Variant { GammaPenalty, AlphaPenalty };

// Everything the pointwise solve needs besides plant, field and target set.
// gamma: margin decay rate. delta: safe level. horizon: T. tbar: settle-time
// bound (unset means the full-horizon condition applies). steps: N.
// htilde: denominator offset; 0 means "resolve automatically before solving".
struct SynthesisSpec {
  double gamma = 1.0;
  double delta = 1.0;
  double horizon = 1.0;
  std::optional<double> tbar;
  int steps = 10;
  int pnorm = 40;
  double htilde = 0.0;
  double c = 1.0;        // class-K slope on the safe side
  double c_alpha = 0.0;  // filter margin
  TerminalMode terminal_mode = TerminalMode::AnyTime;
  Variant variant = Variant::GammaPenalty;
  bool saturated = false;
  std::optional<double> tau_assert;

  double dt() const { return horizon / steps; }
};

// Post-horizon cap on the certified value.
inline double saturation_level(const SynthesisSpec& spec) {
  if (spec.variant == Variant::AlphaPenalty) return spec.delta;
  if (spec.tbar.has_value()) return spec.delta - spec.gamma * (*spec.tbar);
  return spec.delta - spec.gamma * spec.horizon;
}

// Min of h over the domain's grid nodes; used by the htilde bound.
inline double min_h_on_grid(const ConstraintField& field, const DomainBox& domain) {
  validate_domain(domain);
  const int n = domain.dim();
  std::vector<double> step(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // wrapping axes omit the duplicate endpoint node
    const int cells = domain.counts[static_cast<std::size_t>(i)] -
                      (domain.wraps[static_cast<std::size_t>(i)] ? 0 : 1);
    step[static_cast<std::size_t>(i)] = (domain.hi[i] - domain.lo[i]) / cells;
  }
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(domain.counts[static_cast<std::size_t>(i)]);
  double best = std::numeric_limits<double>::infinity();
  Vec x(n);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int i = n - 1; i >= 0; --i) {
      const auto c = static_cast<std::size_t>(domain.counts[static_cast<std::size_t>(i)]);
      x[i] = domain.lo[i] + step[static_cast<std::size_t>(i)] * static_cast<double>(rem % c);
      rem /= c;
    }
    best = std::min(best, h_eval(field, x));
  }
  return best;
}

// Default htilde: strictly above the positivity bound, floored at 1.
inline double auto_htilde(const SynthesisSpec& spec, double min_h) {
  const double bound = std::max(0.0, spec.gamma * spec.horizon - min_h);
  return std::max(1.0, 1.05 * bound);
}

struct CheckItem {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  std::string note;
};

struct ValidationReport {
  std::vector<CheckItem> items;

  bool ok() const {
    for (const auto& it : items)
      if (!it.pass) return false;
    return true;
  }

  std::string summary() const {
    std::ostringstream os;
    for (const auto& it : items)
      os << (it.pass ? "pass " : "FAIL ") << it.name << " (" << it.lhs << " vs " << it.rhs << ")"
         << (it.note.empty() ? "" : " " + it.note) << "\n";
    return os.str();
  }
};

// Checks the decay-rate condition (gamma*tbar < delta, or gamma*T < delta when
// tbar is unset; vacuous for tbar == 0 and for the alpha variant), the htilde
// positivity bound against the grid-sampled min of h, the T >= tau assertion
// when given, and basic parameter sanity.
inline ValidationReport validate_spec(const SynthesisSpec& spec, const ConstraintField& field,
                                      const DomainBox& domain) {
  ValidationReport rep;
  auto push = [&rep](std::string name, double lhs, double rhs, bool pass, std::string note = "") {
    rep.items.push_back({std::move(name), lhs, rhs, pass, std::move(note)});
  };

  push("gamma_positive", spec.gamma, 0.0, spec.gamma > 0.0);
  push("delta_positive", spec.delta, 0.0, spec.delta > 0.0);
  push("horizon_positive", spec.horizon, 0.0, spec.horizon > 0.0);
  push("steps_positive", spec.steps, 1.0, spec.steps >= 1);
  push("pnorm_even_positive", spec.pnorm, 2.0, spec.pnorm >= 2 && spec.pnorm % 2 == 0);
  push("classk_slope_positive", spec.c, 0.0, spec.c > 0.0);
  push("filter_margin_nonnegative", spec.c_alpha, 0.0, spec.c_alpha >= 0.0);

  if (spec.variant == Variant::GammaPenalty) {
    if (spec.tbar.has_value()) {
      if (*spec.tbar > 0.0)
        push("decay_rate_bound", spec.gamma * (*spec.tbar), spec.delta,
             spec.gamma * (*spec.tbar) < spec.delta, "gamma*tbar < delta");
      else
        push("decay_rate_bound", 0.0, spec.delta, *spec.tbar == 0.0, "vacuous at tbar == 0");
    } else {
      push("decay_rate_bound", spec.gamma * spec.horizon, spec.delta,
           spec.gamma * spec.horizon < spec.delta, "gamma*T < delta (tbar unset)");
    }
    if (spec.tbar.has_value())
      push("tbar_within_horizon", *spec.tbar, spec.horizon,
           *spec.tbar >= 0.0 && *spec.tbar <= spec.horizon);
  }

  const double min_h = min_h_on_grid(field, domain);
  const double bound = std::max(0.0, spec.gamma * spec.horizon - min_h);
  push("htilde_above_bound", spec.htilde, bound, spec.htilde > bound,
       "htilde > max{0, gamma*T - min_D h}");
  push("htilde_positive", spec.htilde, 0.0, spec.htilde > 0.0);

  if (spec.tau_assert.has_value())
    push("horizon_covers_tau", spec.horizon, *spec.tau_assert, spec.horizon >= *spec.tau_assert,
         "user-asserted reachability time");

  return rep;
}

}  // namespace cbf
