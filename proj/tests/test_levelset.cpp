#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "cbf/levelset.hpp"

namespace {

std::vector<double> lin_nodes(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return out;
}

}  // namespace

TEST_CASE("uniform-sign fields have no zero contour", "[levelset]") {
  const auto xs = lin_nodes(0.0, 1.0, 4);
  const auto ys = lin_nodes(0.0, 1.0, 4);
  std::vector<double> pos(16, 2.5), neg(16, -0.75);
  CHECK(cbf::zero_contour(xs, ys, pos).empty());
  CHECK(cbf::zero_contour(xs, ys, neg).empty());
  CHECK_THROWS_AS(cbf::zero_contour(xs, ys, std::vector<double>(15, 1.0)),
                  std::invalid_argument);
}

TEST_CASE("circle distance field yields one closed loop on the circle", "[levelset]") {
  const int n = 41;
  const auto xs = lin_nodes(-12.0, 12.0, n);
  const auto ys = lin_nodes(-12.0, 12.0, n);
  std::vector<double> vals(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      vals[static_cast<std::size_t>(i) * n + j] = std::hypot(xs[static_cast<std::size_t>(i)],
                                                             ys[static_cast<std::size_t>(j)]) -
                                                  9.0;

  const auto polys = cbf::zero_contour(xs, ys, vals);
  REQUIRE(polys.size() == 1);
  const auto& loop = polys[0];
  REQUIRE(loop.closed);
  REQUIRE(loop.pts.size() > 20);
  // closed polylines repeat their first point
  CHECK(loop.pts.front().x == loop.pts.back().x);
  CHECK(loop.pts.front().y == loop.pts.back().y);
  // every vertex sits on the circle up to the linear-interpolation error
  for (const auto& p : loop.pts) {
    CHECK(std::abs(std::hypot(p.x, p.y) - 9.0) < 0.02);
  }
  // the loop wraps the full circle: both coordinate signs appear
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : loop.pts) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  CHECK(xmin < -8.9);
  CHECK(xmax > 8.9);
  CHECK(ymin < -8.9);
  CHECK(ymax > 8.9);
}

TEST_CASE("plane field yields a single straight open polyline", "[levelset]") {
  const std::vector<double> xs{0.0, 1.0};
  const auto ys = lin_nodes(0.0, 2.0, 3);
  // f = x - 0.5: sign flips once along x, contour is the segment x = 0.5
  std::vector<double> vals(6);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      vals[static_cast<std::size_t>(i) * 3 + j] = xs[static_cast<std::size_t>(i)] - 0.5;

  const auto polys = cbf::zero_contour(xs, ys, vals);
  REQUIRE(polys.size() == 1);
  CHECK_FALSE(polys[0].closed);
  REQUIRE(polys[0].pts.size() == 3);
  for (const auto& p : polys[0].pts) CHECK(p.x == Catch::Approx(0.5).margin(1e-12));
  // stitched in y order (either direction)
  const double y0 = polys[0].pts.front().y, y2 = polys[0].pts.back().y;
  CHECK(std::abs(y2 - y0) == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("saddle cell splits into two disjoint segments", "[levelset]") {
  const std::vector<double> xs{0.0, 1.0}, ys{0.0, 1.0};
  // diagonal +/- pattern with zero center average
  const std::vector<double> vals{1.0, -1.0, -1.0, 1.0};
  const auto polys = cbf::zero_contour(xs, ys, vals);
  REQUIRE(polys.size() == 2);
  for (const auto& poly : polys) {
    CHECK_FALSE(poly.closed);
    CHECK(poly.pts.size() == 2);
    for (const auto& p : poly.pts) {
      CHECK(p.x >= 0.0);
      CHECK(p.x <= 1.0);
      CHECK(p.y >= 0.0);
      CHECK(p.y <= 1.0);
    }
  }
}

TEST_CASE("contour csv layout", "[levelset]") {
  std::ostringstream empty_os;
  cbf::write_contour_csv({}, empty_os);
  CHECK(empty_os.str() == "poly_id,x,y\n");

  cbf::ContourPolyline seg;
  seg.pts = {{0.5, 0.0}, {0.5, 2.0}};
  std::ostringstream os;
  cbf::write_contour_csv({seg}, os);
  CHECK(os.str() == "poly_id,x,y\n0,0.5,0\n0,0.5,2\n");
}

TEST_CASE("grid slice contour tracks the stored values", "[levelset]") {
  cbf::CbfGrid grid;
  grid.axes = {cbf::GridAxis{-2.0, 2.0, 5, false}, cbf::GridAxis{-2.0, 2.0, 5, false}};
  grid.values.resize(25);
  grid.feas_bits.assign(25, 1);
  std::vector<int> idx(2);
  for (idx[0] = 0; idx[0] < 5; ++idx[0])
    for (idx[1] = 0; idx[1] < 5; ++idx[1])
      grid.values[grid.flat_index(idx)] = grid.axes[0].node(idx[0]) + 0.5;

  const auto polys = cbf::grid_zero_contour(grid, 0, 1, {0, 0});
  REQUIRE(polys.size() == 1);
  for (const auto& p : polys[0].pts) CHECK(p.x == Catch::Approx(-0.5).margin(1e-12));
}
