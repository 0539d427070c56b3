#pragma once

#include "cbf/filter_sim.hpp"

namespace cbf {

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw std::invalid_argument("config: unknown key '" + item.key() + "' in " + where);
  }
}

inline void check_constraint_keys(const json& j) {
  check_keys(j, {"kind", "center", "radius", "eta", "vbound", "children"}, "constraint");
  if (j.contains("children"))
    for (const auto& c : j.at("children")) check_constraint_keys(c);
}

}  // namespace detail

// Parsed run configuration. Blocks are optional at parse time; each command
// checks for the blocks it needs. Unknown keys anywhere are rejected.
struct RunConfig {
  std::optional<ControlSystem> sys;
  std::optional<ConstraintField> field;
  std::optional<InvariantSubset> sub;  // defaulted from model + delta when absent
  std::optional<DomainBox> domain;
  std::optional<SynthesisSpec> spec;
  bool htilde_auto = false;  // resolve htilde from the domain before synthesis

  std::vector<ShiftSchedule> shifts;
  std::optional<double> lambda_max;  // user-asserted shift bound

  FilterConfig filter;
  bool filter_c_alpha_set = false;

  bool has_simulate = false;
  Vec x0;
  double t_end = 0.0;
  std::optional<double> sim_dt;  // default: grid (T/N)/4
  LineTarget line;
  BaselineGains gains;

  std::uint64_t seed = 0;
  int threads = 0;  // <= 0: all logical cores
  std::string raw_text;
};

inline DomainBox parse_domain(const json& j) {
  detail::check_keys(j, {"min", "max", "counts", "wraps"}, "domain");
  DomainBox d;
  const auto lo = j.at("min").get<std::vector<double>>();
  const auto hi = j.at("max").get<std::vector<double>>();
  d.lo = make_vec(lo);
  d.hi = make_vec(hi);
  d.counts = j.at("counts").get<std::vector<int>>();
  if (j.contains("wraps"))
    d.wraps = j.at("wraps").get<std::vector<bool>>();
  else
    d.wraps.assign(lo.size(), false);
  return d;
}

inline SynthesisSpec parse_synthesis(const json& j, bool& htilde_auto) {
  detail::check_keys(j,
                     {"gamma", "delta", "T", "N", "p", "htilde", "c", "c_alpha", "terminal_mode",
                      "variant", "saturated", "tbar", "tau_assert"},
                     "synthesis");
  SynthesisSpec s;
  s.gamma = j.at("gamma").get<double>();
  s.delta = j.at("delta").get<double>();
  s.horizon = j.at("T").get<double>();
  s.steps = j.at("N").get<int>();
  s.pnorm = j.value("p", 40);
  s.c = j.at("c").get<double>();
  s.c_alpha = j.value("c_alpha", 0.0);
  if (j.contains("tbar")) s.tbar = j.at("tbar").get<double>();
  if (j.contains("tau_assert")) s.tau_assert = j.at("tau_assert").get<double>();
  if (j.contains("terminal_mode")) {
    const auto m = j.at("terminal_mode").get<std::string>();
    if (m == "any_time")
      s.terminal_mode = TerminalMode::AnyTime;
    else if (m == "at_final_step")
      s.terminal_mode = TerminalMode::AtFinalStep;
    else
      throw std::invalid_argument("config: unknown terminal_mode '" + m + "'");
  }
  if (j.contains("variant")) {
    const auto v = j.at("variant").get<std::string>();
    if (v == "gamma_penalty")
      s.variant = Variant::GammaPenalty;
    else if (v == "alpha_penalty")
      s.variant = Variant::AlphaPenalty;
    else
      throw std::invalid_argument("config: unknown variant '" + v + "'");
  }
  s.saturated = j.value("saturated", false);
  htilde_auto = true;
  s.htilde = 0.0;
  if (j.contains("htilde") && j.at("htilde").is_number()) {
    s.htilde = j.at("htilde").get<double>();
    htilde_auto = false;
  } else if (j.contains("htilde") && !(j.at("htilde").is_string() && j.at("htilde") == "auto")) {
    throw std::invalid_argument("config: htilde must be a number or \"auto\"");
  }
  return s;
}

inline InvariantSubset default_subset(const ControlSystem& sys, double delta) {
  switch (sys.kind) {
    case ModelKind::SingleIntegrator:
    case ModelKind::DoubleIntegrator:
      return superlevel_subset(delta);
    case ModelKind::Bicycle:
      return eroded_subset(delta, 2.0 * turning_radius(sys.bike));
    case ModelKind::Unicycle: {
      // same erosion, turning radius from speed floor / max yaw rate
      const double radius = sys.input_box.lo[1] / std::max(1e-9, sys.input_box.hi[0]);
      return eroded_subset(delta, 2.0 * radius);
    }
  }
  return superlevel_subset(delta);
}

inline InvariantSubset parse_subset(const json& j, const ControlSystem& sys, double delta) {
  detail::check_keys(j, {"kind", "threshold", "margin"}, "invariant_subset");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "superlevel") return superlevel_subset(j.value("threshold", delta));
  if (kind == "eroded") {
    const InvariantSubset dflt = default_subset(sys, delta);
    return eroded_subset(delta, j.value("margin", dflt.margin));
  }
  throw std::invalid_argument("config: unknown invariant_subset kind '" + kind + "'");
}

inline LineTarget parse_line(const json& j) {
  detail::check_keys(j, {"point", "dir", "cruise"}, "simulate.line");
  LineTarget l;
  l.point = make_vec(j.at("point").get<std::vector<double>>());
  l.dir = make_vec(j.at("dir").get<std::vector<double>>());
  if (l.point.size() != 2 || l.dir.size() != 2 || l.dir.norm() == 0.0)
    throw std::invalid_argument("config: simulate.line needs 2-D point and nonzero dir");
  l.cruise = j.value("cruise", 1.0);
  return l;
}

inline RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
  }
  detail::check_keys(j,
                     {"model", "constraint", "invariant_subset", "domain", "synthesis", "shift",
                      "shifts", "lambda_max", "filter", "simulate", "seed", "threads"},
                     "top level");
  RunConfig cfg;
  cfg.raw_text = text;
  if (j.contains("model")) {
    detail::check_keys(j.at("model"), {"id", "input_box", "bicycle"}, "model");
    if (j.at("model").contains("input_box"))
      detail::check_keys(j.at("model").at("input_box"), {"lo", "hi"}, "model.input_box");
    if (j.at("model").contains("bicycle"))
      detail::check_keys(j.at("model").at("bicycle"),
                         {"wheelbase", "v_min", "v_max", "zeta_max"}, "model.bicycle");
    cfg.sys = j.at("model").get<ControlSystem>();
  }
  if (j.contains("constraint")) {
    detail::check_constraint_keys(j.at("constraint"));
    cfg.field = j.at("constraint").get<ConstraintField>();
  }
  if (j.contains("domain")) cfg.domain = parse_domain(j.at("domain"));
  if (j.contains("synthesis")) cfg.spec = parse_synthesis(j.at("synthesis"), cfg.htilde_auto);
  if (j.contains("invariant_subset")) {
    if (!cfg.sys || !cfg.spec)
      throw std::invalid_argument("config: invariant_subset requires model and synthesis blocks");
    cfg.sub = parse_subset(j.at("invariant_subset"), *cfg.sys, cfg.spec->delta);
  } else if (cfg.sys && cfg.spec) {
    cfg.sub = default_subset(*cfg.sys, cfg.spec->delta);
  }
  if (cfg.sub && cfg.spec && cfg.sub->threshold < cfg.spec->delta - 1e-12)
    throw std::invalid_argument("config: invariant_subset threshold below delta");

  if (j.contains("shift") && j.contains("shifts"))
    throw std::invalid_argument("config: give either 'shift' or 'shifts', not both");
  if (j.contains("shift")) {
    detail::check_keys(j.at("shift"), {"kind", "value", "r", "r_max", "tau_p", "sigma"}, "shift");
    cfg.shifts.push_back(j.at("shift").get<ShiftSchedule>());
  }
  if (j.contains("shifts"))
    for (const auto& s : j.at("shifts")) {
      detail::check_keys(s, {"kind", "value", "r", "r_max", "tau_p", "sigma"}, "shifts[]");
      cfg.shifts.push_back(s.get<ShiftSchedule>());
    }
  if (j.contains("lambda_max")) cfg.lambda_max = j.at("lambda_max").get<double>();

  if (j.contains("filter")) {
    detail::check_keys(j.at("filter"), {"c_alpha", "input_candidates", "sigma_dini", "P"},
                       "filter");
    cfg.filter = j.at("filter").get<FilterConfig>();
    cfg.filter_c_alpha_set = j.at("filter").contains("c_alpha");
  }

  if (j.contains("simulate")) {
    const auto& s = j.at("simulate");
    detail::check_keys(s, {"x0", "t_end", "dt", "line", "gains"}, "simulate");
    cfg.has_simulate = true;
    cfg.x0 = make_vec(s.at("x0").get<std::vector<double>>());
    cfg.t_end = s.at("t_end").get<double>();
    if (s.contains("dt")) cfg.sim_dt = s.at("dt").get<double>();
    cfg.line = parse_line(s.at("line"));
    if (s.contains("gains")) {
      detail::check_keys(s.at("gains"), {"k_p", "k_v", "lookahead", "k_heading"},
                         "simulate.gains");
      const auto& g = s.at("gains");
      cfg.gains.k_p = g.value("k_p", cfg.gains.k_p);
      cfg.gains.k_v = g.value("k_v", cfg.gains.k_v);
      cfg.gains.lookahead = g.value("lookahead", cfg.gains.lookahead);
      cfg.gains.k_heading = g.value("k_heading", cfg.gains.k_heading);
    }
  }

  cfg.seed = j.value("seed", 0ull);
  cfg.threads = j.value("threads", 0);
  return cfg;
}

// Fills in the htilde lower-bound default, which needs the domain.
inline void resolve_htilde(RunConfig& cfg) {
  if (!cfg.spec || !cfg.htilde_auto) return;
  if (!cfg.field || !cfg.domain)
    throw std::invalid_argument("config: htilde auto needs constraint and domain blocks");
  cfg.spec->htilde = auto_htilde(*cfg.spec, min_h_on_grid(*cfg.field, *cfg.domain));
  cfg.htilde_auto = false;
}

}  // namespace cbf
