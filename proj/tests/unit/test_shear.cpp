#include "doctest.h"

#include "fpp/shear.hpp"

#include <cmath>

using namespace fpp;

namespace {

Vec rand_vec(Engine& eng, int d, double lo, double hi) {
  Vec v(d);
  for (int k = 0; k < d; ++k) v(k) = uniform(eng, lo, hi);
  return v;
}

Eigen::VectorXd rand_t(Engine& eng, int m, double r) {
  Eigen::VectorXd t(m);
  for (int k = 0; k < m; ++k) t(k) = uniform(eng, -r, r);
  return t;
}

std::vector<Vec> straight(const Vec& a, const Vec& b, int n) {
  std::vector<Vec> p;
  for (int k = 0; k <= n; ++k) p.push_back(a + (static_cast<double>(k) / n) * (b - a));
  p.front() = a;
  p.back() = b;
  return p;
}

}  // namespace

TEST_CASE("shear map basics") {
  const ShearFrame fr(make_vec({1, 0}));
  const ShearMap xi(fr, make_vec({1, 1}));
  CHECK(bit_equal(xi.apply(make_vec({2, 3})), make_vec({2, 5})));
  CHECK(xi.determinant() == 1.0);
  const ShearMap id(fr, make_vec({1, 0}));
  Engine eng(1);
  for (int i = 0; i < 100; ++i) {
    const Vec x = rand_vec(eng, 2, -10, 10);
    CHECK(bit_equal(id.apply(x), x));
  }
  CHECK_THROWS_AS(ShearMap(fr, make_vec({1.1, 0.5})), InvalidArgument);
}

TEST_CASE("shear map determinant and orthogonality on random frames") {
  Engine eng(2);
  for (int i = 0; i < 50; ++i) {
    const int d = i % 2 == 0 ? 2 : 3;
    const Vec v = rand_vec(eng, d, -2, 2);
    const ShearFrame fr(v);
    for (int j = 0; j < fr.codim(); ++j) {
      CHECK(std::abs(fr.h(j).dot(v)) <= 1e-14 * v.norm());
      CHECK(std::abs(fr.h(j).norm() - 1.0) <= 1e-15);
    }
    const auto xi = ShearMap::from_coordinates(fr, rand_t(eng, d - 1, 0.9));
    CHECK(xi.determinant() == 1.0);
    CHECK(std::abs(xi.matrix().determinant() - 1.0) <= 1e-14);
    const double t = uniform(eng, 1, 50);
    CHECK((xi.apply(t * v) - t * xi.w()).norm() <= 1e-13 * t);
    const Vec h = fr.h(0);
    CHECK(bit_equal(xi.apply(h), h + fr.axial(h) * xi.offset()));
    CHECK((xi.inverse_apply(xi.apply(h)) - h).norm() <= 1e-15);
  }
}

TEST_CASE("broken-line transformed action") {
  const BrokenLineCost cost(LagrangianSpec::iso_quad(2, 1.0));
  const auto empty = PointConfiguration::from_points(2, {});
  const ShearFrame fr(make_vec({1, 0}));
  const auto path = straight(make_vec({0, 0}), make_vec({50, 0}), 50);
  CHECK(transformed_action_bl(empty, cost, ShearMap(fr, make_vec({1, 1})), path) == 150.0);
  const ShearMap id(fr, make_vec({1, 0}));
  CHECK(grad_B_bl(cost, id, path)(0) == 0.0);
  // Hessian for the isotropic case: sum 2a <v, step>^2 / |v|^4.
  CHECK(hess_B_bl(cost, id, path)(0, 0) == doctest::Approx(100.0).epsilon(1e-15));

  const auto env = sample_points(Window::cube(2, -30, 30), 4);
  const auto g = geodesic(env, cost, make_vec({0, 0}), make_vec({12, 0}));
  const ShearFrame fv(make_vec({12, 0}));
  CHECK(transformed_action_bl(env, cost, ShearMap(fv, fv.v()), g.path.vertices) ==
        path_action(env, cost, g.path.vertices));
}

TEST_CASE("broken-line gradient and Hessian match finite differences") {
  Engine eng(3);
  const std::vector<LagrangianSpec> ls{LagrangianSpec::iso_quad(2, 1.0), LagrangianSpec::quad_plus_quartic(2, 1.0, 0.4),
                                       LagrangianSpec::aniso_quad((Mat(2, 2) << 2.0, 0.4, 0.4, 1.0).finished()),
                                       LagrangianSpec::quad_plus_quartic(3, 0.7, 0.3)};
  int cases = 0;
  for (int rep = 0; rep < 52; ++rep) {
    const auto& l = ls[static_cast<std::size_t>(rep) % ls.size()];
    const int d = l.dim();
    const BrokenLineCost cost(l);
    const Vec v = rand_vec(eng, d, -1.5, 1.5);
    const ShearFrame fr(v);
    std::vector<Vec> path{Vec::Zero(d)};
    for (int k = 0; k < 8; ++k) path.push_back(path.back() + rand_vec(eng, d, -1.5, 1.5));
    const auto env = PointConfiguration::from_points(d, {path[3]});
    const Eigen::VectorXd t = rand_t(eng, d - 1, 0.5);
    const auto xi = ShearMap::from_coordinates(fr, t);
    const Eigen::VectorXd g = grad_B_bl(cost, xi, path);
    const Eigen::MatrixXd h = hess_B_bl(cost, xi, path);
    const double eps = 1e-5;
    for (int j = 0; j < d - 1; ++j) {
      Eigen::VectorXd tp = t, tm = t;
      tp(j) += eps;
      tm(j) -= eps;
      const double fd = (transformed_action_bl(env, cost, ShearMap::from_coordinates(fr, tp), path) -
                         transformed_action_bl(env, cost, ShearMap::from_coordinates(fr, tm), path)) /
                        (2 * eps);
      CHECK(std::abs(g(j) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      const Eigen::VectorXd fdh =
          (grad_B_bl(cost, ShearMap::from_coordinates(fr, tp), path) - grad_B_bl(cost, ShearMap::from_coordinates(fr, tm), path)) /
          (2 * eps);
      for (int k = 0; k < d - 1; ++k) CHECK(std::abs(h(k, j) - fdh(k)) <= 1e-5 * std::max(1.0, std::abs(fdh(k))));
    }
    ++cases;
  }
  CHECK(cases >= 50);
}

TEST_CASE("Riemannian transformed action identities and derivatives") {
  MarkLaw law;
  law.amplitude = 1.5;
  Engine eng(4);
  int cases = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const MetricMode mode = s % 2 == 0 ? MetricMode::kSum : MetricMode::kProduct;
    const MetricField f(sample_marked(Window::cube(2, -8, 8), 300 + s, law), mode, 0.7);
    const Vec v = rand_vec(eng, 2, 2, 3);
    const ShearFrame fr(v);
    PolyPath p;
    p.vertices = straight(Vec::Zero(2), v, 12);
    for (std::size_t k = 1; k + 1 < p.vertices.size(); ++k) p.vertices[k] += rand_vec(eng, 2, -0.2, 0.2);
    CHECK(transformed_action_riem(f, ShearMap(fr, v), p) == path_length(f, p));
    const Eigen::VectorXd t = rand_t(eng, 1, 0.4);
    const auto xi = ShearMap::from_coordinates(fr, t);
    const double eps = 1e-5;
    Eigen::VectorXd tp = t, tm = t;
    tp(0) += eps;
    tm(0) -= eps;
    const double fd = (transformed_action_riem(f, ShearMap::from_coordinates(fr, tp), p) -
                       transformed_action_riem(f, ShearMap::from_coordinates(fr, tm), p)) /
                      (2 * eps);
    const double g = grad_B_riem(f, xi, p)(0);
    CHECK(std::abs(g - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    const double fdh = (grad_B_riem(f, ShearMap::from_coordinates(fr, tp), p)(0) -
                        grad_B_riem(f, ShearMap::from_coordinates(fr, tm), p)(0)) /
                       (2 * eps);
    const double h = hess_B_riem(f, xi, p)(0, 0);
    CHECK(std::abs(h - fdh) <= 1e-4 * std::max(1.0, std::abs(fdh)));
    ++cases;
  }
  CHECK(cases == 20);
}

TEST_CASE("Riemannian derivative routes agree for a constant field") {
  Mat m(2, 2);
  m << 3.0, 0.8, 0.8, 1.5;
  const auto f = MetricField::constant(m);
  const Vec v = make_vec({1.0, 0.4});
  const ShearFrame fr(v);
  const double t_scale = 30.0;
  PolyPath chord{straight(Vec::Zero(2), t_scale * v, 1), {}};
  const Vec u = fr.h(0);
  const double eps = 1e-6;
  auto norm_m = [&](const Vec& z) { return std::sqrt(z.dot(m * z)); };
  const double fd = t_scale * (norm_m(v + eps * u) - norm_m(v - eps * u)) / (2 * eps);
  const double g = grad_B_riem(f, ShearMap(fr, v), chord)(0);
  CHECK(std::abs(g - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
  const PolyPath unit = unit_speed_reparametrize(f, chord);
  const double formula = riem_derivative_formula(f, fr, unit, u);
  CHECK(std::abs(formula - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
  // <grad Lambda(v), w> for w = v is Lambda(v).
  CHECK(std::abs(riem_derivative_formula(f, fr, unit, v) / t_scale - norm_m(v)) <= 1e-9);
}

TEST_CASE("low-discrepancy samples stay inside H(delta)") {
  for (int d : {2, 3}) {
    const ShearFrame fr(d == 2 ? make_vec({1, 2}) : make_vec({1, 2, -1}), 1.0);
    const auto s = h_delta_samples(fr, 64);
    CHECK(s.size() == 64);
    for (const auto& t : s) CHECK(t.norm() < 1.0);
  }
}

TEST_CASE("empty-environment Hessian monitor is constant in T") {
  const BrokenLineCost cost(LagrangianSpec::iso_quad(2, 1.0));
  const auto empty = PointConfiguration::from_points(2, {});
  const ShearFrame fr(make_vec({1, 0}));
  for (double t : {10.0, 20.0, 40.0, 80.0}) {
    const auto g = geodesic(empty, cost, make_vec({0, 0}), make_vec({t, 0}));
    CHECK(sup_hessian_norm_bl(cost, fr, g.path.vertices, 64) / t == 2.0);
  }
}

TEST_CASE("chi-square two-sample statistic") {
  const auto same = chi2_two_sample({10, 20, 30}, {10, 20, 30}, 1e-3);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  CHECK(same.dof == 2);
  // 2x2 table with a known statistic: (30-20)^2/20 * 4 = 20, dof 1.
  const auto diff = chi2_two_sample({30, 10}, {10, 30}, 1e-3);
  CHECK(diff.statistic == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(diff.p_value == doctest::Approx(7.744216431044e-06).epsilon(1e-9));
  CHECK_FALSE(diff.pass);
}

TEST_CASE("sheared Poisson cell counts match fresh samples") {
  const auto r = shear_invariance_chi2(make_vec({1, 0}), make_vec({1, 0.5}), 200, 17);
  CHECK(r.pass);
  std::uint64_t total = 0;
  for (auto x : r.sheared) total += x;
  CHECK(total == 200 * 16);
}
