#pragma once

#include "cbf/grid.hpp"

namespace cbf {

struct GridCheckItem {
  std::string name;
  bool pass = true;
  bool gated = true;  // info-only items never fail the suite
  std::string detail;
};

struct GridCheckReport {
  std::vector<GridCheckItem> items;
  double capital_lambda = 0.0;
  double lipschitz_observed = 0.0;
  double speed_bound = 0.0;  // max over nodes of min over box corners ||f||

  bool pass() const {
    for (const auto& it : items)
      if (it.gated && !it.pass) return false;
    return true;
  }
};

namespace detail {

inline std::string fmt_num(double v) {
  char b[40];
  std::snprintf(b, sizeof(b), "%.6g", v);
  return b;
}

}  // namespace detail

// Invariant suite over a synthesized grid: value-vs-constraint upper bound,
// sign soundness, saturation cap, plus informational shift bound, observed
// Lipschitz ratio, and the ascent-rate budget c*delta vs L*M.
inline GridCheckReport run_grid_checks(const CbfGrid& grid) {
  GridCheckReport rep;
  const auto& spec = grid.meta.spec;
  const std::size_t n = grid.size();

  {
    DomainBox dom;
    dom.lo.resize(grid.dim());
    dom.hi.resize(grid.dim());
    for (int i = 0; i < grid.dim(); ++i) {
      dom.lo[i] = grid.axes[static_cast<std::size_t>(i)].lo;
      dom.hi[i] = grid.axes[static_cast<std::size_t>(i)].hi;
      dom.counts.push_back(grid.axes[static_cast<std::size_t>(i)].count);
      dom.wraps.push_back(grid.axes[static_cast<std::size_t>(i)].wraps);
    }
    const ValidationReport v = validate_spec(spec, grid.meta.field, dom);
    GridCheckItem it;
    it.name = "spec_valid";
    it.pass = v.ok();
    it.detail = v.ok() ? "stored synthesis parameters pass validation" : v.summary();
    rep.items.push_back(std::move(it));
  }

  {
    GridCheckItem it;
    it.name = "upper_bound";
    std::size_t bad = 0;
    double worst = 0.0;
    for (std::size_t f = 0; f < n; ++f) {
      if (!grid.node_feasible(f)) continue;
      const double h = h_eval(grid.meta.field, grid.node_state(f));
      const double gap = grid.values[f] - h;
      if (gap > 1e-9) {
        ++bad;
        worst = std::max(worst, gap);
      }
    }
    it.pass = bad == 0;
    it.detail = bad == 0 ? "H <= h + 1e-9 at all feasible nodes"
                         : std::to_string(bad) + " nodes exceed h, worst by " + detail::fmt_num(worst);
    rep.items.push_back(std::move(it));
  }

  {
    GridCheckItem it;
    it.name = "soundness";
    std::size_t bad = 0;
    for (std::size_t f = 0; f < n; ++f) {
      if (!grid.node_feasible(f)) continue;
      if (grid.values[f] >= 0.0 && h_eval(grid.meta.field, grid.node_state(f)) < 0.0) ++bad;
    }
    it.pass = bad == 0;
    it.detail = bad == 0 ? "H >= 0 implies h >= 0 at all feasible nodes"
                         : std::to_string(bad) + " certified nodes violate the constraint";
    rep.items.push_back(std::move(it));
  }

  if (spec.saturated) {
    GridCheckItem it;
    it.name = "saturation_cap";
    const double level = saturation_level(spec);
    std::size_t bad = 0;
    for (std::size_t f = 0; f < n; ++f)
      if (grid.values[f] > level + 1e-12) ++bad;
    it.pass = bad == 0;
    it.detail = bad == 0 ? "all values <= saturation level " + detail::fmt_num(level)
                         : std::to_string(bad) + " nodes exceed the saturation level";
    rep.items.push_back(std::move(it));
  }

  rep.capital_lambda = compute_capital_lambda(grid).capital_lambda;
  {
    GridCheckItem it;
    it.name = "capital_lambda";
    it.gated = false;
    it.detail = detail::fmt_num(rep.capital_lambda);
    rep.items.push_back(std::move(it));
  }

  // observed Lipschitz ratio over axis-adjacent node pairs
  {
    double lip = 0.0;
    std::vector<int> idx;
    for (std::size_t f = 0; f < n; ++f) {
      grid.unflatten(f, idx);
      for (int i = 0; i < grid.dim(); ++i) {
        const auto& a = grid.axes[static_cast<std::size_t>(i)];
        int j = idx[static_cast<std::size_t>(i)] + 1;
        if (j >= a.count) {
          if (!a.wraps) continue;
          j = 0;
        }
        std::vector<int> nidx = idx;
        nidx[static_cast<std::size_t>(i)] = j;
        const double dv = std::abs(grid.values[grid.flat_index(nidx)] - grid.values[f]);
        lip = std::max(lip, dv / a.step());
      }
    }
    rep.lipschitz_observed = lip;
    GridCheckItem it;
    it.name = "lipschitz_observed";
    it.gated = false;
    it.detail = detail::fmt_num(lip);
    rep.items.push_back(std::move(it));
  }

  // ascent-rate budget: the slope condition c*delta >= L*M with M the best
  // achievable speed (min over input-box corners, worst node). Informational:
  // L is the grid estimate, not the true Lipschitz constant.
  {
    const auto& box = grid.meta.sys.input_box;
    const int m = grid.meta.sys.input_dim;
    double M = 0.0;
    Vec u(m), fx(grid.dim());
    for (std::size_t f = 0; f < n; ++f) {
      const Vec x = grid.node_state(f);
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < (1 << m); ++c) {
        for (int j = 0; j < m; ++j) u[j] = ((c >> j) & 1) ? box.hi[j] : box.lo[j];
        eval_f_into(grid.meta.sys, x, u, fx);
        best = std::min(best, fx.norm());
      }
      M = std::max(M, best);
    }
    rep.speed_bound = M;
    GridCheckItem it;
    it.name = "ascent_rate_budget";
    it.gated = false;
    const double lhs = spec.c * spec.delta, rhs = rep.lipschitz_observed * M;
    it.pass = lhs >= rhs;
    it.detail = "c*delta = " + detail::fmt_num(lhs) + " vs L*M = " + detail::fmt_num(rhs);
    rep.items.push_back(std::move(it));
  }

  return rep;
}

inline json grid_check_report_to_json(const GridCheckReport& rep) {
  json items = json::array();
  for (const auto& it : rep.items)
    items.push_back(json{{"name", it.name}, {"pass", it.pass}, {"gated", it.gated}, {"detail", it.detail}});
  return json{{"pass", rep.pass()},
              {"items", items},
              {"info",
               {{"capital_lambda", rep.capital_lambda},
                {"lipschitz_observed", rep.lipschitz_observed},
                {"speed_bound", rep.speed_bound}}}};
}

}  // namespace cbf
