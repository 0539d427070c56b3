#pragma once

#include <atomic>
#include <cstring>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>

#include "cbf/serialize.hpp"
#include "cbf/synthesis.hpp"

namespace cbf {

// Node i sits at lo + i*step. Non-wrapping axes include both endpoints;
// wrapping axes treat hi as identified with lo and omit the duplicate node.
struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  int count = 2;
  bool wraps = false;

  double step() const { return (hi - lo) / (wraps ? count : count - 1); }
  double node(int i) const { return lo + step() * i; }
  double period() const { return hi - lo; }
};

inline void to_json(json& j, const GridAxis& a) {
  j = json{{"min", a.lo}, {"max", a.hi}, {"count", a.count}, {"wraps", a.wraps}};
}

inline void from_json(const json& j, GridAxis& a) {
  a.lo = j.at("min").get<double>();
  a.hi = j.at("max").get<double>();
  a.count = j.at("count").get<int>();
  a.wraps = j.at("wraps").get<bool>();
}

struct GridMeta {
  SynthesisSpec spec;
  ControlSystem sys;
  ConstraintField field;
  InvariantSubset sub;
  std::uint64_t seed = 0;
  std::string config_text;  // verbatim run config when produced by the CLI
};

struct ShiftBound {
  double capital_lambda = 0.0;  // >= 0
};

// Value grid over the rectangular domain; row-major, last axis fastest.
// Infeasible nodes keep their computed value in `values` but are exposed to
// queries as a strongly negative sentinel.
struct CbfGrid {
  std::vector<GridAxis> axes;
  std::vector<double> values;
  std::vector<std::uint8_t> feas_bits;  // packed, little-endian bit order
  GridMeta meta;

  int dim() const { return static_cast<int>(axes.size()); }

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= static_cast<std::size_t>(a.count);
    return n;
  }

  std::size_t flat_index(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (int i = 0; i < dim(); ++i)
      f = f * static_cast<std::size_t>(axes[static_cast<std::size_t>(i)].count) +
          static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
    return f;
  }

  void unflatten(std::size_t flat, std::vector<int>& idx) const {
    idx.resize(static_cast<std::size_t>(dim()));
    for (int i = dim() - 1; i >= 0; --i) {
      const auto c = static_cast<std::size_t>(axes[static_cast<std::size_t>(i)].count);
      idx[static_cast<std::size_t>(i)] = static_cast<int>(flat % c);
      flat /= c;
    }
  }

  Vec node_state(std::size_t flat) const {
    std::vector<int> idx;
    unflatten(flat, idx);
    Vec x(dim());
    for (int i = 0; i < dim(); ++i)
      x[i] = axes[static_cast<std::size_t>(i)].node(idx[static_cast<std::size_t>(i)]);
    return x;
  }

  bool node_feasible(std::size_t flat) const {
    return (feas_bits[flat >> 3] >> (flat & 7)) & 1u;
  }

  void set_node_feasible(std::size_t flat, bool f) {
    if (f)
      feas_bits[flat >> 3] |= static_cast<std::uint8_t>(1u << (flat & 7));
    else
      feas_bits[flat >> 3] &= static_cast<std::uint8_t>(~(1u << (flat & 7)));
  }

  double sentinel() const {
    return -(saturation_level(meta.spec) + 10.0 * meta.spec.gamma * meta.spec.horizon);
  }

  // value as seen by interpolation/filters
  double query_value(std::size_t flat) const {
    return node_feasible(flat) ? values[flat] : sentinel();
  }
};

namespace detail {

struct AxisLocation {
  int i0 = 0;
  int i1 = 0;
  double frac = 0.0;
};

// Locates the enclosing cell on one axis; wrapping axes reduce the query
// modulo the period. strict=false clamps instead of throwing.
inline AxisLocation locate(const GridAxis& a, double x, int axis_index, bool strict,
                           bool* clamped) {
  AxisLocation L;
  if (a.wraps) {
    const double per = a.period();
    double y = std::fmod(x - a.lo, per);
    if (y < 0.0) y += per;
    double t = y / a.step();
    int i0 = static_cast<int>(std::floor(t));
    if (i0 >= a.count) i0 = a.count - 1;  // guards t == count from fp rounding
    L.i0 = i0;
    L.i1 = (i0 + 1) % a.count;
    L.frac = t - i0;
    return L;
  }
  const double span = a.hi - a.lo;
  const double tol = 1e-9 * std::max(1.0, std::abs(span));
  if (x < a.lo - tol || x > a.hi + tol) {
    if (strict)
      throw std::out_of_range("interpolate: coordinate " + std::to_string(axis_index) +
                              " = " + std::to_string(x) + " outside [" + std::to_string(a.lo) +
                              ", " + std::to_string(a.hi) + "]");
    if (clamped) *clamped = true;
  }
  double xc = std::min(std::max(x, a.lo), a.hi);
  double t = (xc - a.lo) / a.step();
  int i0 = static_cast<int>(std::floor(t));
  if (i0 > a.count - 2) i0 = a.count - 2;
  if (i0 < 0) i0 = 0;
  L.i0 = i0;
  L.i1 = i0 + 1;
  L.frac = std::min(std::max(t - i0, 0.0), 1.0);
  return L;
}

}  // namespace detail

struct InterpResult {
  double value = 0.0;
  bool clamped = false;
  bool touched_infeasible = false;
};

inline InterpResult interpolate_ex(const CbfGrid& grid, const Vec& x, bool strict) {
  const int n = grid.dim();
  if (x.size() != n) throw std::invalid_argument("interpolate: state dimension mismatch");
  InterpResult out;
  std::array<detail::AxisLocation, 8> loc;
  for (int i = 0; i < n; ++i)
    loc[static_cast<std::size_t>(i)] =
        detail::locate(grid.axes[static_cast<std::size_t>(i)], x[i], i, strict, &out.clamped);
  // accumulate over the 2^n enclosing corners
  double acc = 0.0;
  const int corners = 1 << n;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int i = 0; i < n; ++i) {
      const auto& L = loc[static_cast<std::size_t>(i)];
      const bool hi = (c >> i) & 1;
      w *= hi ? L.frac : 1.0 - L.frac;
      flat = flat * static_cast<std::size_t>(grid.axes[static_cast<std::size_t>(i)].count) +
             static_cast<std::size_t>(hi ? L.i1 : L.i0);
    }
    if (w == 0.0) continue;
    if (!grid.node_feasible(flat)) out.touched_infeasible = true;
    acc += w * grid.query_value(flat);
  }
  out.value = acc;
  return out;
}

// Multilinear interpolation; throws out_of_range off-domain (non-wrapping axes).
inline double interpolate(const CbfGrid& grid, const Vec& x) {
  return interpolate_ex(grid, x, true).value;
}

// Clamping variant for the filter path.
inline InterpResult interpolate_clamped(const CbfGrid& grid, const Vec& x) {
  return interpolate_ex(grid, x, false);
}

// Forward-difference directional derivative of the interpolated surface.
// sigma = 0.1 * (min cell edge) / max(1, ||v||) unless overridden.
inline double dini_directional(const CbfGrid& grid, const Vec& x, const Vec& v,
                               std::optional<double> sigma_override = std::nullopt) {
  const double vn = v.norm();
  if (vn == 0.0) return 0.0;
  double min_edge = std::numeric_limits<double>::infinity();
  for (const auto& a : grid.axes) min_edge = std::min(min_edge, a.step());
  const double sigma =
      sigma_override.has_value() ? *sigma_override : 0.1 * min_edge / std::max(1.0, vn);
  return (interpolate(grid, x + sigma * v) - interpolate(grid, x)) / sigma;
}

inline double dini_directional_clamped(const CbfGrid& grid, const Vec& x, const Vec& v,
                                       std::optional<double> sigma_override, bool* clamped,
                                       bool* touched_infeasible) {
  const double vn = v.norm();
  if (vn == 0.0) return 0.0;
  double min_edge = std::numeric_limits<double>::infinity();
  for (const auto& a : grid.axes) min_edge = std::min(min_edge, a.step());
  const double sigma =
      sigma_override.has_value() ? *sigma_override : 0.1 * min_edge / std::max(1.0, vn);
  const InterpResult a = interpolate_clamped(grid, x);
  const InterpResult b = interpolate_clamped(grid, x + sigma * v);
  if (clamped) *clamped |= a.clamped || b.clamped;
  if (touched_infeasible) *touched_infeasible |= a.touched_infeasible || b.touched_infeasible;
  return (b.value - a.value) / sigma;
}

// Largest shift that keeps the corresponding superlevel set off the domain
// boundary: -(max stored value over the outermost node shell of every
// non-wrapping axis), floored at 0. All-wrapping grids have no boundary.
inline ShiftBound compute_capital_lambda(const CbfGrid& grid) {
  double boundary_max = -std::numeric_limits<double>::infinity();
  std::vector<int> idx;
  const std::size_t n = grid.size();
  for (std::size_t f = 0; f < n; ++f) {
    grid.unflatten(f, idx);
    bool boundary = false;
    for (int i = 0; i < grid.dim(); ++i) {
      const auto& a = grid.axes[static_cast<std::size_t>(i)];
      if (!a.wraps &&
          (idx[static_cast<std::size_t>(i)] == 0 || idx[static_cast<std::size_t>(i)] == a.count - 1)) {
        boundary = true;
        break;
      }
    }
    if (boundary) boundary_max = std::max(boundary_max, grid.values[f]);
  }
  ShiftBound b;
  if (boundary_max == -std::numeric_limits<double>::infinity())
    b.capital_lambda = std::numeric_limits<double>::infinity();  // no boundary at all
  else
    b.capital_lambda = std::max(0.0, -boundary_max);
  return b;
}

struct MonotoneReport {
  bool axes_match = true;
  bool rate_condition = true;  // gamma < delta / T2
  std::vector<double> lambdas;
  std::size_t violations = 0;
  double worst_gap = 0.0;  // max over violations of (-lambda - tol) - H_T2
  std::size_t worst_node = 0;
  bool pass() const { return axes_match && rate_condition && violations == 0; }
};

// Superlevel-set growth check: every node certified at level -lambda by the
// short-horizon grid must be certified within tol by the long-horizon grid.
inline MonotoneReport check_monotone(const CbfGrid& g1, const CbfGrid& g2, double tol = 0.05) {
  MonotoneReport rep;
  if (g1.axes.size() != g2.axes.size()) throw std::invalid_argument("check_monotone: axis rank mismatch");
  for (std::size_t i = 0; i < g1.axes.size(); ++i) {
    const auto &a = g1.axes[i], &b = g2.axes[i];
    if (a.lo != b.lo || a.hi != b.hi || a.count != b.count || a.wraps != b.wraps)
      throw std::invalid_argument("check_monotone: axis mismatch");
  }
  const auto& s2 = g2.meta.spec;
  rep.rate_condition = s2.gamma < s2.delta / s2.horizon;

  const double lam_cap = std::min(compute_capital_lambda(g1).capital_lambda,
                                  compute_capital_lambda(g2).capital_lambda);
  const double lam = std::isfinite(lam_cap) ? lam_cap : 0.0;
  rep.lambdas = {0.0, 0.5 * lam, lam};

  for (double l : rep.lambdas) {
    for (std::size_t f = 0; f < g1.size(); ++f) {
      if (g1.query_value(f) >= -l && g2.query_value(f) < -l - tol) {
        ++rep.violations;
        const double gap = (-l - tol) - g2.query_value(f);
        if (gap > rep.worst_gap) {
          rep.worst_gap = gap;
          rep.worst_node = f;
        }
      }
    }
  }
  return rep;
}

namespace detail {

inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 0) {
    const unsigned hc = std::thread::hardware_concurrency();
    threads = hc == 0 ? 1 : static_cast<int>(hc);
  }
  if (static_cast<std::size_t>(threads) > n) threads = static_cast<int>(n == 0 ? 1 : n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) break;
          fn(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct NodeResult {
  double value = -std::numeric_limits<double>::infinity();
  double violation = std::numeric_limits<double>::infinity();
  bool feasible = false;
  bool converged = false;
  bool shortcut = false;
  Eigen::VectorXd u;  // empty for shortcut nodes

  bool better_than(const NodeResult& o) const {
    if (feasible != o.feasible) return feasible;
    if (!feasible && violation != o.violation) return violation < o.violation;
    return value > o.value;
  }
};

}  // namespace detail

// Fills every node via solve_point; two deterministic phases. Phase 1 runs the
// seed-derived restarts per node (order-free). Phase 2 re-solves each node
// warm-started from its best phase-1 axis neighbor and keeps the better
// result, so the output is a pure function of (spec, domain, seed) and in
// particular independent of the thread count.
inline CbfGrid synthesize_grid(const SynthesisSpec& spec, const ControlSystem& sys,
                               const ConstraintField& field, const InvariantSubset& sub,
                               const DomainBox& domain, int threads, std::uint64_t seed,
                               const SolverOptions& opts = {}) {
  validate_domain(domain);
  if (domain.dim() != sys.state_dim)
    throw std::invalid_argument("synthesize_grid: domain rank != state dimension");

  CbfGrid grid;
  grid.axes.resize(static_cast<std::size_t>(domain.dim()));
  for (int i = 0; i < domain.dim(); ++i) {
    auto& a = grid.axes[static_cast<std::size_t>(i)];
    a.lo = domain.lo[i];
    a.hi = domain.hi[i];
    a.count = domain.counts[static_cast<std::size_t>(i)];
    a.wraps = domain.wraps[static_cast<std::size_t>(i)];
  }
  const std::size_t n = grid.size();
  grid.values.assign(n, 0.0);
  grid.feas_bits.assign((n + 7) / 8, 0);
  grid.meta.spec = spec;
  grid.meta.sys = sys;
  grid.meta.field = field;
  grid.meta.sub = sub;
  grid.meta.seed = seed;

  const double level = saturation_level(spec);
  std::vector<detail::NodeResult> phase1(n);

  detail::parallel_for(n, threads, [&](std::size_t f) {
    auto& r = phase1[f];
    const Vec x0 = grid.node_state(f);
    if (spec.saturated) {
      if (auto v = solve_point_on_f_shortcut(spec, sub, field, x0)) {
        r.value = *v;
        r.violation = 0.0;
        r.feasible = true;
        r.converged = true;
        r.shortcut = true;
        return;
      }
    }
    PointSolve ps = solve_point(spec, sys, field, sub, x0, mix_seed(seed, f), {}, opts);
    r.value = ps.value;
    r.violation = ps.terminal_violation;
    r.feasible = ps.feasible;
    r.converged = ps.converged;
    r.u.resize(static_cast<Eigen::Index>(spec.steps) * sys.input_dim);
    for (int k = 0; k < spec.steps; ++k)
      r.u.segment(static_cast<Eigen::Index>(k) * sys.input_dim, sys.input_dim) =
          ps.u_star[static_cast<std::size_t>(k)];
  });

  // phase 2: warm start from the best phase-1 axis neighbor (deterministic:
  // depends only on phase-1 output)
  std::vector<detail::NodeResult> phase2(n);
  detail::parallel_for(n, threads, [&](std::size_t f) {
    auto& r1 = phase1[f];
    auto& r2 = phase2[f];
    r2 = r1;  // default: keep phase 1
    if (r1.shortcut) return;

    std::vector<int> idx;
    grid.unflatten(f, idx);
    const detail::NodeResult* best_nb = nullptr;
    for (int i = 0; i < grid.dim(); ++i) {
      const auto& a = grid.axes[static_cast<std::size_t>(i)];
      for (int d : {-1, +1}) {
        int j = idx[static_cast<std::size_t>(i)] + d;
        if (a.wraps)
          j = (j + a.count) % a.count;
        else if (j < 0 || j >= a.count)
          continue;
        std::vector<int> nidx = idx;
        nidx[static_cast<std::size_t>(i)] = j;
        const auto& nb = phase1[grid.flat_index(nidx)];
        if (nb.u.size() == 0) continue;  // shortcut node, no trajectory to reuse
        if (!nb.better_than(r1)) continue;
        if (best_nb == nullptr || nb.better_than(*best_nb)) best_nb = &nb;
      }
    }
    if (best_nb == nullptr) return;

    const Vec x0 = grid.node_state(f);
    PointSolve ps = solve_point_warm_only(spec, sys, field, sub, x0, best_nb->u, opts);
    detail::NodeResult cand;
    cand.value = ps.value;
    cand.violation = ps.terminal_violation;
    cand.feasible = ps.feasible;
    cand.converged = ps.converged;
    if (cand.better_than(r1)) {
      cand.u.resize(static_cast<Eigen::Index>(spec.steps) * sys.input_dim);
      for (int k = 0; k < spec.steps; ++k)
        cand.u.segment(static_cast<Eigen::Index>(k) * sys.input_dim, sys.input_dim) =
            ps.u_star[static_cast<std::size_t>(k)];
      r2 = std::move(cand);
    }
  });

  for (std::size_t f = 0; f < n; ++f) {
    double v = phase2[f].value;
    if (spec.saturated) v = std::min(v, level);
    grid.values[f] = v;
    grid.set_node_feasible(f, phase2[f].feasible);
  }
  return grid;
}

// ---- persistence ----------------------------------------------------------

namespace detail {

inline void append_raw(std::string& buf, const void* p, std::size_t len) {
  buf.append(static_cast<const char*>(p), len);
}

template <typename T>
void append_le(std::string& buf, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  // assumes little-endian host; format is defined little-endian
  buf.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

}  // namespace detail

inline json grid_meta_to_json(const CbfGrid& grid) {
  json j;
  j["axes"] = grid.axes;
  j["constraint"] = grid.meta.field;
  j["invariant_subset"] = grid.meta.sub;
  j["model"] = grid.meta.sys;
  j["saturated"] = grid.meta.spec.saturated;
  j["seed"] = grid.meta.seed;
  j["spec"] = grid.meta.spec;
  j["tool"] = json{{"name", "cbf"}, {"version", "0.1.0"}};
  j["optimizer"] = json{{"method", "projected_gradient_armijo"},
                        {"restarts", {"zero_or_midpoint", "h_ascent", "seeded_random", "neighbor_warm"}},
                        {"mu_rounds", {1e2, 1e4, 1e6}},
                        {"max_iters", 400},
                        {"step_tol", 1e-10},
                        {"rel_tol", 1e-9},
                        {"rel_window", 5}};
  if (!grid.meta.config_text.empty()) j["config_text"] = grid.meta.config_text;
  return j;
}

inline std::string serialize_grid(const CbfGrid& grid) {
  std::string buf;
  buf.reserve(64 + grid.values.size() * 8 + grid.feas_bits.size());
  detail::append_raw(buf, "CBFG", 4);
  detail::append_le<std::uint32_t>(buf, 1u);
  const std::string meta = grid_meta_to_json(grid).dump();
  detail::append_le<std::uint64_t>(buf, meta.size());
  buf += meta;
  for (double v : grid.values) detail::append_le<double>(buf, v);
  detail::append_raw(buf, grid.feas_bits.data(), grid.feas_bits.size());
  const std::uint32_t crc = crc32c(buf.data(), buf.size());
  detail::append_le<std::uint32_t>(buf, crc);
  return buf;
}

inline void save_grid(const CbfGrid& grid, const std::string& path) {
  const std::string buf = serialize_grid(grid);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_grid: cannot open " + path);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("save_grid: write failed for " + path);
}

inline CbfGrid deserialize_grid(const std::string& buf) {
  if (buf.size() < 4 + 4 + 8 + 4) throw std::runtime_error("grid file: truncated (checksum region missing)");
  if (std::memcmp(buf.data(), "CBFG", 4) != 0) throw std::runtime_error("grid file: bad magic");
  std::uint32_t version;
  std::memcpy(&version, buf.data() + 4, 4);
  if (version != 1u)
    throw std::runtime_error("grid file: unsupported version " + std::to_string(version));

  const std::uint32_t stored_crc = [&] {
    std::uint32_t c;
    std::memcpy(&c, buf.data() + buf.size() - 4, 4);
    return c;
  }();
  const std::uint32_t crc = crc32c(buf.data(), buf.size() - 4);
  if (crc != stored_crc) throw std::runtime_error("grid file: checksum mismatch (corrupt or truncated)");

  std::uint64_t meta_len;
  std::memcpy(&meta_len, buf.data() + 8, 8);
  std::size_t off = 16;
  if (off + meta_len > buf.size() - 4) throw std::runtime_error("grid file: checksum mismatch (corrupt or truncated)");
  const json meta = json::parse(buf.substr(off, meta_len));
  off += meta_len;

  CbfGrid grid;
  grid.axes = meta.at("axes").get<std::vector<GridAxis>>();
  grid.meta.spec = meta.at("spec").get<SynthesisSpec>();
  grid.meta.sys = meta.at("model").get<ControlSystem>();
  grid.meta.field = meta.at("constraint").get<ConstraintField>();
  grid.meta.sub = meta.at("invariant_subset").get<InvariantSubset>();
  grid.meta.seed = meta.at("seed").get<std::uint64_t>();
  grid.meta.config_text = meta.value("config_text", std::string());

  const std::size_t n = grid.size();
  const std::size_t vals_bytes = n * 8;
  const std::size_t bits_bytes = (n + 7) / 8;
  if (off + vals_bytes + bits_bytes + 4 != buf.size())
    throw std::runtime_error("grid file: payload size mismatch");
  grid.values.resize(n);
  std::memcpy(grid.values.data(), buf.data() + off, vals_bytes);
  off += vals_bytes;
  grid.feas_bits.resize(bits_bytes);
  std::memcpy(grid.feas_bits.data(), buf.data() + off, bits_bytes);
  return grid;
}

inline CbfGrid load_grid(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_grid: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_grid(buf);
}

// CSV of a 2-D slice: header "x,y,H", node order (second kept axis fastest).
// keep_i/keep_j select axes; fixed_idx pins every other axis to a node index.
inline void export_slice_csv(const CbfGrid& grid, int keep_i, int keep_j,
                             const std::vector<int>& fixed_idx, std::ostream& os,
                             const std::string& header_comment = "") {
  if (keep_i == keep_j || keep_i < 0 || keep_j < 0 || keep_i >= grid.dim() || keep_j >= grid.dim())
    throw std::invalid_argument("export_slice_csv: bad axis selection");
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << "x,y,H\n";
  const auto& ai = grid.axes[static_cast<std::size_t>(keep_i)];
  const auto& aj = grid.axes[static_cast<std::size_t>(keep_j)];
  std::vector<int> idx = fixed_idx;
  char line[128];
  for (int i = 0; i < ai.count; ++i) {
    for (int j = 0; j < aj.count; ++j) {
      idx[static_cast<std::size_t>(keep_i)] = i;
      idx[static_cast<std::size_t>(keep_j)] = j;
      const std::size_t f = grid.flat_index(idx);
      std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", ai.node(i), aj.node(j),
                    grid.values[f]);
      os << line;
    }
  }
}

}  // namespace cbf
