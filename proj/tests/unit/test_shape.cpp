#include "doctest.h"

#include "fpp/shape.hpp"

#include <cmath>
#include <numbers>

using namespace fpp;

namespace {

BrokenLineModel bl_model(double intensity = 1.0) {
  BrokenLineModel m;
  m.cost = BrokenLineCost(LagrangianSpec::iso_quad(2, 1.0));
  m.intensity = intensity;
  return m;
}

RiemannianModel riem_model(double intensity, double lambda = 1.0) {
  RiemannianModel m;
  m.intensity = intensity;
  m.lambda = lambda;
  m.law.amplitude = 1.0;
  return m;
}

SamplingOptions opts(std::uint64_t seed = 7, int jobs = 1) {
  SamplingOptions o;
  o.base_seed = seed;
  o.jobs = jobs;
  return o;
}

}  // namespace

TEST_CASE("cellwise sampling is consistent under restriction") {
  const auto big = sample_points_cellwise(Window::cube(2, -6, 6), 11);
  const auto small = sample_points_cellwise(Window::cube(2, -3, 4), 11);
  std::vector<Vec> restricted;
  for (const Vec& p : big.points())
    if (small.window().contains(p)) restricted.push_back(p);
  REQUIRE(restricted.size() == small.size());
  for (std::size_t i = 0; i < restricted.size(); ++i) CHECK(bit_equal(restricted[i], small[i]));
  CHECK_THROWS_AS(sample_points_cellwise(Window::cube(2, -2.5, 3), 1), InvalidArgument);
  // Mean count over many cells is the intensity.
  const auto dense = sample_points_cellwise(Window::cube(2, -50, 50), 3, 2.0);
  CHECK(std::abs(static_cast<double>(dense.size()) / 20000.0 - 1.0) < 0.03);
  const auto mk = sample_marked_cellwise(Window::cube(2, -4, 4), 5, MarkLaw{});
  const auto mk2 = sample_marked_cellwise(Window::cube(2, -8, 8), 5, MarkLaw{});
  for (std::size_t i = 0; i < mk.config.size(); ++i) {
    const long j = mk2.config.find(mk.config[i]);
    REQUIRE(j >= 0);
    CHECK(mk.marks[i].amplitude == mk2.marks[static_cast<std::size_t>(j)].amplitude);
  }
}

TEST_CASE("lambda estimate closed forms") {
  const Model empty_bl = bl_model(0.0);
  const auto e = estimate_lambda(empty_bl, make_vec({1, 0}), 50, 3, opts());
  CHECK(e.stat.mean == 2.0);
  CHECK(e.stat.stderr_ == 0.0);
  const Model euclid = riem_model(0.0);
  const Vec v = make_vec({0.6, -0.3});
  const auto r = estimate_lambda(euclid, v, 20, 2, opts());
  CHECK(std::abs(r.stat.mean - v.norm()) <= 1e-6);
}

TEST_CASE("lambda decreases with intensity") {
  const auto lo = estimate_lambda(bl_model(0.5), make_vec({1, 0}), 20, 30, opts(3));
  const auto hi = estimate_lambda(bl_model(1.5), make_vec({1, 0}), 20, 30, opts(3));
  CHECK(hi.stat.mean <= lo.stat.mean + 2.0 * std::hypot(lo.stat.stderr_, hi.stat.stderr_));
}

TEST_CASE("shape scan bookkeeping and symmetry") {
  const Model m = bl_model();
  DirectionGrid one;
  one.directions = {make_vec({0.8, 0.6})};
  const auto s = shape_scan(m, one, {15.0}, 6, opts());
  const auto e = estimate_lambda(m, make_vec({0.8, 0.6}), 15.0, 6, opts());
  for (int i = 0; i < 6; ++i) CHECK(s.values[0][0][static_cast<std::size_t>(i)] == e.values[static_cast<std::size_t>(i)]);

  const auto grid = DirectionGrid::make(2, 8, true);
  const auto scan = shape_scan(m, grid, {20.0}, 30, opts(5));
  for (int k = 0; k < 4; ++k) {
    const Stat a = scan.cell(k, 0), b = scan.cell(k + 4, 0);
    CHECK(a.mean > 0.0);
    CHECK(std::abs(a.mean - b.mean) <= 2.0 * std::hypot(a.stderr_, b.stderr_));
  }
  // Upper bound from at most ceil(|x - y|) + 1 unit steps.
  const double sup_l = 1.0;
  for (int k = 0; k < 8; ++k)
    for (double x : scan.values[static_cast<std::size_t>(k)][0]) CHECK(x <= (1.0 + 2.0 / 20.0) * (sup_l + 1.0));
}

TEST_CASE("direction grids") {
  for (int d : {2, 3}) {
    const auto g = DirectionGrid::make(d, 16, true);
    CHECK(g.size() == 16);
    for (const Vec& u : g.directions) CHECK(std::abs(u.norm() - 1.0) <= 1e-15);
    for (int k = 0; k < 8; ++k) {
      const Vec& u = g.directions[static_cast<std::size_t>(k)];
      bool found = false;
      for (const Vec& w : g.directions) found = found || (u + w).norm() <= 1e-12;
      CHECK(found);
    }
  }
  CHECK_THROWS_AS(DirectionGrid::make(2, 5, true), InvalidArgument);
}

TEST_CASE("limit shapes from lambda") {
  const auto grid = DirectionGrid::make(2, 24);
  const auto e = shape_scan(riem_model(0.0), grid, {10.0}, 1, opts());
  const auto s = limit_shape_from_lambda(e, 10.0);
  for (const Vec& p : s.boundary) CHECK(std::abs(p.norm() - 1.0) <= 1e-4);
  // Star-shaped: every ray meets the boundary, gauge is 1-homogeneous.
  for (int i = 0; i < 50; ++i) {
    const double th = 0.1 + 0.37 * i;
    const Vec z = make_vec({std::cos(th), std::sin(th)});
    CHECK(std::abs(s.gauge(3.0 * z) - 3.0 * s.gauge(z)) <= 1e-12);
  }

  BrokenLineModel base = bl_model();
  BrokenLineModel scaled = base;
  scaled.cost = base.cost.scaled(2.5);
  const auto g4 = DirectionGrid::make(2, 4);
  const auto a = limit_shape_from_lambda(shape_scan(base, g4, {12.0}, 4, opts()), 12.0);
  const auto b = limit_shape_from_lambda(shape_scan(scaled, g4, {12.0}, 4, opts()), 12.0);
  for (std::size_t k = 0; k < a.boundary.size(); ++k)
    CHECK((a.boundary[k] / 2.5 - b.boundary[k]).norm() <= 1e-12);
}

TEST_CASE("empirical ball of the empty environment") {
  const Model m = bl_model(0.0);
  const auto rays = DirectionGrid::make(2, 16);
  const double t = 20.0;
  const auto ball = empirical_ball(m, 1, t, 0.5, rays, opts());
  for (const Vec& p : ball.shape.boundary) CHECK(std::abs(p.norm() - 0.5) <= 0.5 / t + 1e-12);
  // A(0, x) >= 2|x| with equality at integer |x| along axes.
  for (std::size_t i = 0; i < ball.points.size(); ++i)
    if (ball.inside(i)) CHECK(ball.points[i].norm() <= t / 2 + 1e-12);
  LimitShape exact;
  for (int k = 0; k < 64; ++k) {
    const double th = 2 * std::numbers::pi * k / 64;
    exact.boundary.push_back(make_vec({0.5 * std::cos(th), 0.5 * std::sin(th)}));
  }
  CHECK(sandwich_check(ball, exact, 0.15).pass);
}

TEST_CASE("empirical ball is monotone in T and matches point-to-point solves") {
  const Model m = bl_model();
  const auto rays = DirectionGrid::make(2, 8);
  const auto o = opts(9);
  const auto b1 = empirical_ball(m, 4, 8.0, 1.0, rays, o);
  const auto b2 = empirical_ball(m, 4, 10.0, 1.0, rays, o);
  const Environment env = sample_environment(m, 4, 40);
  const auto& cost = std::get<BrokenLineModel>(m).cost;
  int checked = 0;
  for (std::size_t i = 0; i < b1.points.size(); ++i) {
    if (!b1.inside(i)) continue;
    const Vec& z = b1.points[i];
    bool found = false;
    for (std::size_t j = 0; j < b2.points.size(); ++j)
      if (bit_equal(b2.points[j], z)) found = b2.inside(j);
    CHECK(found);
    if (checked < 25 && z.norm() > 0) {
      CHECK(std::abs(action(env.points, cost, Vec::Zero(2), z) - b1.action[i]) <= 1e-9);
      ++checked;
    }
  }
  CHECK(checked == 25);
}

TEST_CASE("convexity check oracles") {
  const auto grid = DirectionGrid::make(2, 16);
  const auto e = shape_scan(bl_model(0.0), grid, {30.0}, 1, opts());
  const auto r = convexity_check(e, 30.0);
  CHECK(r.pass);
  CHECK(r.triples.size() == 96);
  for (const auto& tr : r.triples) CHECK(tr.violation <= 1e-12);

  // Manufactured estimates: an anisotropic norm passes, a star-shaped
  // non-convex profile fails.
  Mat mm(2, 2);
  mm << 3.0, 0.8, 0.8, 1.5;
  ShapeEstimate norm_e = e, bad = e;
  for (int k = 0; k < 16; ++k) {
    const Vec& u = grid.directions[static_cast<std::size_t>(k)];
    norm_e.values[static_cast<std::size_t>(k)][0] = {std::sqrt(u.dot(mm * u))};
    bad.values[static_cast<std::size_t>(k)][0] = {k % 4 == 1 ? 1.5 : 1.0};
  }
  CHECK(convexity_check(norm_e, 30.0).pass);
  CHECK_FALSE(convexity_check(bad, 30.0).pass);
}

TEST_CASE("homogeneity check") {
  const Model m = bl_model();
  const auto r = homogeneity_check(m, make_vec({1, 0.3}), {1.0, 2.0, 0.5}, 16.0, 20, opts(2));
  REQUIRE(r.entries.size() == 3);
  CHECK(r.entries[0].exact_error == 0.0);
  CHECK(r.entries[0].difference == 0.0);
  CHECK(r.entries[1].exact_pass);
  CHECK(r.entries[2].pass);
}

TEST_CASE("derivative check oracles") {
  const ShearFrame fr(make_vec({1, 0}), 1.0);
  const auto e = derivative_check(bl_model(0.0), fr, {20.0, 40.0}, 2, 0.1, opts());
  CHECK(e.pass);
  for (const auto& en : e.entries) {
    CHECK(en.formula.mean == 0.0);
    CHECK(en.fd.mean == 0.0);
  }
  const ShearFrame fr2(make_vec({0.8, 0.5}), 1.0);
  const auto r = derivative_check(riem_model(0.0, 2.0), fr2, {10.0}, 1, 0.05, opts(), Tolerances{.derivative_absolute = 1e-3});
  CHECK(r.pass);
  for (const auto& en : r.entries) CHECK(std::abs(en.formula.mean) <= 1e-3);
  CHECK_THROWS_AS(derivative_check(bl_model(0.0), fr, {20.0}, 1, 0.3, opts()), InvalidArgument);
}

TEST_CASE("Hessian monitor is exactly constant in the empty environment") {
  const ShearFrame fr(make_vec({1, 0}), 1.0);
  const auto r = hessian_monitor(bl_model(0.0), fr, {10, 20, 40, 80}, 64, 2, opts());
  for (double x : r.m_hat) CHECK(x == 2.0);
  CHECK(r.pass);
  CHECK(r.rows.size() == 8);
}

TEST_CASE("transformed optimum at w = v is the direct minimal action") {
  const Model m = bl_model();
  const Vec v = make_vec({1, 0.2});
  const ShearFrame fr(v);
  const Environment env = sample_environment(m, 21, 40);
  const auto direct = solve(m, env, Vec::Zero(2), 12.0 * v).action;
  CHECK(std::abs(transformed_optimum(m, env, ShearMap(fr, v), 12.0) - direct) <= 1e-12 * direct);
}

TEST_CASE("parallel and serial results agree bit for bit") {
  const Model m = bl_model();
  const auto grid = DirectionGrid::make(2, 4);
  const auto a = shape_scan(m, grid, {10.0, 14.0}, 5, opts(8, 1));
  const auto b = shape_scan(m, grid, {10.0, 14.0}, 5, opts(8, 4));
  CHECK(a.values == b.values);
}
