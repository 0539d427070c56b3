#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "cbf/constraint.hpp"
#include "cbf/dynamics.hpp"
#include "cbf/types.hpp"

// json (de)serialization of the domain types; key order is nlohmann's sorted
// default so emitted metadata is byte-stable.

namespace cbf {

using json = nlohmann::json;

inline json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_from_json(const json& a) {
  Vec v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (const auto& x : a) v[i++] = x.get<double>();
  return v;
}

inline void to_json(json& j, const Box& b) {
  j = json{{"lo", vec_to_json(b.lo)}, {"hi", vec_to_json(b.hi)}};
}

inline void from_json(const json& j, Box& b) {
  b.lo = vec_from_json(j.at("lo"));
  b.hi = vec_from_json(j.at("hi"));
}

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::SingleIntegrator: return "single_integrator";
    case ModelKind::DoubleIntegrator: return "double_integrator";
    case ModelKind::Bicycle: return "kinematic_bicycle";
    case ModelKind::Unicycle: return "unicycle";
  }
  return "?";
}

inline void to_json(json& j, const ControlSystem& s) {
  j = json{{"id", s.id}, {"input_box", s.input_box}};
  if (s.kind == ModelKind::Bicycle)
    j["bicycle"] = json{{"wheelbase", s.bike.wheelbase},
                        {"v_min", s.bike.v_min},
                        {"v_max", s.bike.v_max},
                        {"zeta_max", s.bike.zeta_max}};
}

inline void from_json(const json& j, ControlSystem& s) {
  const std::string id = j.at("id").get<std::string>();
  Box b = j.at("input_box").get<Box>();
  if (id == "single_integrator") {
    s = single_integrator(std::move(b));
  } else if (id == "double_integrator") {
    s = double_integrator(std::move(b));
  } else if (id == "kinematic_bicycle") {
    BicycleParams p;
    const auto& bj = j.at("bicycle");
    p.wheelbase = bj.at("wheelbase").get<double>();
    p.v_min = bj.at("v_min").get<double>();
    p.v_max = bj.at("v_max").get<double>();
    p.zeta_max = bj.at("zeta_max").get<double>();
    s = kinematic_bicycle(p);
  } else if (id == "unicycle") {
    s = unicycle(std::move(b));
  } else {
    throw std::invalid_argument("unknown model id: " + id);
  }
}

inline void to_json(json& j, const ConstraintField& f) {
  switch (f.kind) {
    case FieldKind::Circle:
      j = json{{"kind", "circle"}, {"center", {f.cx, f.cy}}, {"radius", f.radius}};
      break;
    case FieldKind::ModifiedDoubleIntegrator:
      j = json{{"kind", "modified_double_integrator"},
               {"center", {f.cx, f.cy}},
               {"radius", f.radius},
               {"eta", f.eta},
               {"vbound", f.vbound}};
      break;
    case FieldKind::CompositeMin: {
      json c = json::array();
      for (const auto& ch : f.children) c.push_back(ch);
      j = json{{"kind", "composite_min"}, {"children", std::move(c)}};
      break;
    }
  }
}

inline void from_json(const json& j, ConstraintField& f) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "circle") {
    f = circle_field(j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>(),
                     j.at("radius").get<double>());
  } else if (kind == "modified_double_integrator") {
    f = modified_double_integrator_field(
        j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>(),
        j.at("radius").get<double>(), j.at("eta").get<double>(),
        j.value("vbound", 2.0));
  } else if (kind == "composite_min") {
    std::vector<ConstraintField> children;
    for (const auto& c : j.at("children")) children.push_back(c.get<ConstraintField>());
    f = composite_min_field(std::move(children));
  } else {
    throw std::invalid_argument("unknown constraint kind: " + kind);
  }
}

inline void to_json(json& j, const InvariantSubset& s) {
  j = json{{"kind", s.kind == SubsetKind::Superlevel ? "superlevel" : "eroded_superlevel"},
           {"threshold", s.threshold},
           {"margin", s.margin}};
}

inline void from_json(const json& j, InvariantSubset& s) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "superlevel")
    s.kind = SubsetKind::Superlevel;
  else if (kind == "eroded_superlevel")
    s.kind = SubsetKind::ErodedSuperlevel;
  else
    throw std::invalid_argument("unknown invariant_subset kind: " + kind);
  s.threshold = j.at("threshold").get<double>();
  s.margin = j.at("margin").get<double>();
}

inline void to_json(json& j, const SynthesisSpec& s) {
  j = json{{"gamma", s.gamma},
           {"delta", s.delta},
           {"T", s.horizon},
           {"N", s.steps},
           {"p", s.pnorm},
           {"htilde", s.htilde},
           {"c", s.c},
           {"c_alpha", s.c_alpha},
           {"terminal_mode", s.terminal_mode == TerminalMode::AnyTime ? "any_time" : "at_final_step"},
           {"variant", s.variant == Variant::GammaPenalty ? "gamma_penalty" : "alpha_penalty"},
           {"saturated", s.saturated}};
  if (s.tbar.has_value()) j["tbar"] = *s.tbar;
  if (s.tau_assert.has_value()) j["tau_assert"] = *s.tau_assert;
}

inline void from_json(const json& j, SynthesisSpec& s) {
  s.gamma = j.at("gamma").get<double>();
  s.delta = j.at("delta").get<double>();
  s.horizon = j.at("T").get<double>();
  s.steps = j.at("N").get<int>();
  s.pnorm = j.at("p").get<int>();
  s.htilde = j.at("htilde").get<double>();
  s.c = j.at("c").get<double>();
  s.c_alpha = j.at("c_alpha").get<double>();
  const std::string tm = j.at("terminal_mode").get<std::string>();
  if (tm == "at_final_step") s.terminal_mode = TerminalMode::AtFinalStep;
  else if (tm == "any_time") s.terminal_mode = TerminalMode::AnyTime;
  else throw std::invalid_argument("unknown terminal_mode: " + tm);
  const std::string va = j.at("variant").get<std::string>();
  if (va == "alpha_penalty") s.variant = Variant::AlphaPenalty;
  else if (va == "gamma_penalty") s.variant = Variant::GammaPenalty;
  else throw std::invalid_argument("unknown variant: " + va);
  s.saturated = j.at("saturated").get<bool>();
  if (j.contains("tbar")) s.tbar = j.at("tbar").get<double>();
  else s.tbar.reset();
  if (j.contains("tau_assert")) s.tau_assert = j.at("tau_assert").get<double>();
  else s.tau_assert.reset();
}

}  // namespace cbf
