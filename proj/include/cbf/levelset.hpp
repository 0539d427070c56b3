#pragma once

#include <map>
#include <tuple>

#include "cbf/grid.hpp"

namespace cbf {

struct ContourPoint {
  double x = 0.0;
  double y = 0.0;
};

struct ContourPolyline {
  std::vector<ContourPoint> pts;
  bool closed = false;
};

namespace detail {

// edge key: endpoints as node-index pairs, order-normalized
using EdgeKey = std::array<int, 4>;

inline EdgeKey edge_key(int i0, int j0, int i1, int j1) {
  if (std::tie(i0, j0) <= std::tie(i1, j1)) return {i0, j0, i1, j1};
  return {i1, j1, i0, j0};
}

inline ContourPoint edge_cross(double xa, double ya, double va, double xb, double yb, double vb) {
  const double t = va / (va - vb);  // va, vb straddle zero
  return {xa + t * (xb - xa), ya + t * (yb - ya)};
}

}  // namespace detail

// Zero contour of a scalar field sampled on a rectangular lattice
// (values[i*ny + j] at (xs[i], ys[j])), via marching squares with segment
// stitching into polylines. Node values exactly 0 are nudged positive so
// every cell case is unambiguous; saddle cells use the center average.
inline std::vector<ContourPolyline> zero_contour(const std::vector<double>& xs,
                                                 const std::vector<double>& ys,
                                                 const std::vector<double>& values) {
  const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
  if (static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) != values.size())
    throw std::invalid_argument("zero_contour: size mismatch");
  const auto val = [&](int i, int j) {
    double v = values[static_cast<std::size_t>(i) * ny + j];
    return v == 0.0 ? 1e-300 : v;
  };

  // collect segments keyed by the lattice edges they terminate on
  struct Segment {
    detail::EdgeKey a, b;
  };
  std::vector<Segment> segs;
  std::map<detail::EdgeKey, ContourPoint> pts;

  for (int i = 0; i + 1 < nx; ++i) {
    for (int j = 0; j + 1 < ny; ++j) {
      const double v00 = val(i, j), v10 = val(i + 1, j);
      const double v01 = val(i, j + 1), v11 = val(i + 1, j + 1);
      int mask = 0;
      if (v00 > 0) mask |= 1;
      if (v10 > 0) mask |= 2;
      if (v11 > 0) mask |= 4;
      if (v01 > 0) mask |= 8;
      if (mask == 0 || mask == 15) continue;

      // crossing points on the four cell edges (S, E, N, W)
      const auto on_s = detail::edge_key(i, j, i + 1, j);
      const auto on_e = detail::edge_key(i + 1, j, i + 1, j + 1);
      const auto on_n = detail::edge_key(i, j + 1, i + 1, j + 1);
      const auto on_w = detail::edge_key(i, j, i, j + 1);
      const auto cross = [&](const detail::EdgeKey& k, double xa, double ya, double va, double xb,
                             double yb, double vb) {
        pts.emplace(k, detail::edge_cross(xa, ya, va, xb, yb, vb));
      };
      if ((mask & 1) != ((mask >> 1) & 1)) cross(on_s, xs[i], ys[j], v00, xs[i + 1], ys[j], v10);
      if (((mask >> 1) & 1) != ((mask >> 2) & 1))
        cross(on_e, xs[i + 1], ys[j], v10, xs[i + 1], ys[j + 1], v11);
      if (((mask >> 3) & 1) != ((mask >> 2) & 1))
        cross(on_n, xs[i], ys[j + 1], v01, xs[i + 1], ys[j + 1], v11);
      if ((mask & 1) != ((mask >> 3) & 1)) cross(on_w, xs[i], ys[j], v00, xs[i], ys[j + 1], v01);

      switch (mask) {
        case 1: case 14: segs.push_back({on_w, on_s}); break;
        case 2: case 13: segs.push_back({on_s, on_e}); break;
        case 3: case 12: segs.push_back({on_w, on_e}); break;
        case 4: case 11: segs.push_back({on_e, on_n}); break;
        case 6: case 9:  segs.push_back({on_s, on_n}); break;
        case 7: case 8:  segs.push_back({on_w, on_n}); break;
        case 5: case 10: {
          // saddle: split by the cell-center sign
          const double c = 0.25 * (v00 + v10 + v01 + v11);
          const bool center_pos = c > 0;
          if ((mask == 5) == center_pos) {
            segs.push_back({on_w, on_n});
            segs.push_back({on_s, on_e});
          } else {
            segs.push_back({on_w, on_s});
            segs.push_back({on_e, on_n});
          }
          break;
        }
        default: break;
      }
    }
  }

  // stitch segments into polylines by shared edge keys
  std::multimap<detail::EdgeKey, std::size_t> by_end;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    by_end.emplace(segs[s].a, s);
    by_end.emplace(segs[s].b, s);
  }
  std::vector<bool> used(segs.size(), false);
  std::vector<ContourPolyline> out;

  const auto take_next = [&](const detail::EdgeKey& k, std::size_t& sid) {
    auto range = by_end.equal_range(k);
    for (auto it = range.first; it != range.second; ++it) {
      if (!used[it->second]) {
        sid = it->second;
        return true;
      }
    }
    return false;
  };

  for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
    if (used[s0]) continue;
    used[s0] = true;
    std::vector<detail::EdgeKey> chain{segs[s0].a, segs[s0].b};
    // extend forward then backward
    for (int dir = 0; dir < 2; ++dir) {
      for (;;) {
        const detail::EdgeKey tail = dir == 0 ? chain.back() : chain.front();
        std::size_t sid;
        if (!take_next(tail, sid)) break;
        used[sid] = true;
        const detail::EdgeKey nxt = segs[sid].a == tail ? segs[sid].b : segs[sid].a;
        if (dir == 0)
          chain.push_back(nxt);
        else
          chain.insert(chain.begin(), nxt);
      }
    }
    ContourPolyline poly;
    poly.closed = chain.size() > 2 && chain.front() == chain.back();
    if (poly.closed) chain.pop_back();
    for (const auto& k : chain) poly.pts.push_back(pts.at(k));
    if (poly.closed && !poly.pts.empty()) poly.pts.push_back(poly.pts.front());
    out.push_back(std::move(poly));
  }
  return out;
}

// Zero contour of a 2-D grid slice; axes/fixed indices as export_slice_csv.
inline std::vector<ContourPolyline> grid_zero_contour(const CbfGrid& grid, int keep_i, int keep_j,
                                                      const std::vector<int>& fixed_idx) {
  const auto& ai = grid.axes[static_cast<std::size_t>(keep_i)];
  const auto& aj = grid.axes[static_cast<std::size_t>(keep_j)];
  std::vector<double> xs(static_cast<std::size_t>(ai.count)), ys(static_cast<std::size_t>(aj.count));
  for (int i = 0; i < ai.count; ++i) xs[static_cast<std::size_t>(i)] = ai.node(i);
  for (int j = 0; j < aj.count; ++j) ys[static_cast<std::size_t>(j)] = aj.node(j);
  std::vector<double> vals(xs.size() * ys.size());
  std::vector<int> idx = fixed_idx;
  for (int i = 0; i < ai.count; ++i)
    for (int j = 0; j < aj.count; ++j) {
      idx[static_cast<std::size_t>(keep_i)] = i;
      idx[static_cast<std::size_t>(keep_j)] = j;
      vals[static_cast<std::size_t>(i) * ys.size() + static_cast<std::size_t>(j)] =
          grid.values[grid.flat_index(idx)];
    }
  return zero_contour(xs, ys, vals);
}

// CSV "poly_id,x,y"; empty contour writes only the header.
inline void write_contour_csv(const std::vector<ContourPolyline>& polys, std::ostream& os) {
  os << "poly_id,x,y\n";
  char line[96];
  for (std::size_t p = 0; p < polys.size(); ++p)
    for (const auto& pt : polys[p].pts) {
      std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", p, pt.x, pt.y);
      os << line;
    }
}

}  // namespace cbf
