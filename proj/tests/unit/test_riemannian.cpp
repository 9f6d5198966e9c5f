#include "doctest.h"

#include "fpp/riemannian.hpp"

#include <cmath>

using namespace fpp;

namespace {

MetricField random_field(std::uint64_t seed, MetricMode mode, double amplitude = 1.0) {
  MarkLaw law;
  law.radius = 1.0;
  law.amplitude = amplitude;
  return MetricField(sample_marked(Window::cube(2, -6, 6), seed, law), mode, 0.5);
}

Vec rand_vec(Engine& eng, int d, double lo, double hi) {
  Vec v(d);
  for (int k = 0; k < d; ++k) v(k) = uniform(eng, lo, hi);
  return v;
}

}  // namespace

TEST_CASE("bump profile derivatives match finite differences") {
  for (double s : {0.0, 0.1, 0.37, 0.6, 0.85}) {
    const double e = 1e-6;
    CHECK(bump_d1(s) == doctest::Approx((bump(s + e) - bump(s - e)) / (2 * e)).epsilon(1e-7));
    CHECK(bump_d2(s) == doctest::Approx((bump_d1(s + e) - bump_d1(s - e)) / (2 * e)).epsilon(1e-6));
  }
  CHECK(bump(0.0) == 1.0);
  CHECK(bump(1.0) == 0.0);
  CHECK(bump(2.0) == 0.0);
}

TEST_CASE("exp divided differences") {
  CHECK(exp_divided_difference({0.3}) == doctest::Approx(std::exp(0.3)));
  CHECK(exp_divided_difference({0.3, 2.5}) == doctest::Approx((std::exp(2.5) - std::exp(0.3)) / 2.2));
  CHECK(exp_divided_difference({0.3, 0.3}) == doctest::Approx(std::exp(0.3)).epsilon(1e-14));
  CHECK(exp_divided_difference({0.7, 0.7, 0.7}) == doctest::Approx(0.5 * std::exp(0.7)).epsilon(1e-14));
  const double a = -1.0, b = 0.5, c = 3.0;
  const double ab = (std::exp(b) - std::exp(a)) / (b - a), bc = (std::exp(c) - std::exp(b)) / (c - b);
  CHECK(exp_divided_difference({a, b, c}) == doctest::Approx((bc - ab) / (c - a)).epsilon(1e-13));
  const double t = 0.2, u = 0.2 + 1e-9;
  CHECK(exp_divided_difference({t, u}) == doctest::Approx(std::exp(t + 0.5e-9)).epsilon(1e-14));
}

TEST_CASE("symmetric exponential Frechet derivatives") {
  Engine eng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = rep % 2 == 0 ? 2 : 3;
    Mat a = Mat::Random(d, d), e = Mat::Random(d, d), f = Mat::Random(d, d);
    a = (a + a.transpose()).eval();
    e = (e + e.transpose()).eval();
    f = (f + f.transpose()).eval();
    const SymmetricExp x(a);
    const double h = 1e-5;
    const Mat fd1 = (SymmetricExp(a + h * e).value() - SymmetricExp(a - h * e).value()) / (2 * h);
    CHECK((x.d1(e) - fd1).norm() <= 1e-7 * fd1.norm());
    const Mat fd2 = (SymmetricExp(a + h * f).d1(e) - SymmetricExp(a - h * f).d1(e)) / (2 * h);
    CHECK((x.d2(e, f) - fd2).norm() <= 1e-6 * (1.0 + fd2.norm()));
  }
}

TEST_CASE("metric values and trivial fields") {
  const auto id = MetricField::constant(Mat::Identity(2, 2));
  CHECK(id.metric_at(make_vec({0.3, 7.0})) == Mat::Identity(2, 2));
  const auto f = random_field(1, MetricMode::kSum);
  const auto p = random_field(1, MetricMode::kProduct);
  Engine eng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec x = rand_vec(eng, 2, -4, 4);
    const Mat g = f.metric_at(x), gp = p.metric_at(x);
    CHECK((g - g.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(g), ep(gp);
    CHECK(es.eigenvalues()(0) >= 0.5 - 1e-12);
    CHECK(ep.eigenvalues()(0) >= 1.0 - 1e-12);
  }
  // Far outside every support.
  const auto lone = MetricField(
      MarkedConfiguration::make(Window::cube(2, -5, 5), 0, {make_vec({0, 0})}, {KernelSpec{1.0, Mat::Identity(2, 2)}}, true),
      MetricMode::kSum, 2.0);
  CHECK(lone.metric_at(make_vec({3, 0})) == 2.0 * Mat::Identity(2, 2));
  CHECK(lone.metric_at(make_vec({0, 0})) == 3.0 * Mat::Identity(2, 2));
}

TEST_CASE("metric gradient matches central finite differences") {
  for (MetricMode mode : {MetricMode::kSum, MetricMode::kProduct}) {
    const auto f = random_field(2, mode);
    Engine eng(6);
    int checked = 0;
    for (int i = 0; i < 50; ++i) {
      const Vec x = rand_vec(eng, 2, -4, 4);
      const auto dg = f.metric_grad_at(x);
      for (int k = 0; k < 2; ++k) {
        const double h = 1e-6;
        const Vec e = Vec::Unit(2, k);
        const Mat fd = (f.metric_at(x + h * e) - f.metric_at(x - h * e)) / (2 * h);
        const double scale = std::max(1.0, fd.norm());
        CHECK((dg[static_cast<std::size_t>(k)] - fd).norm() <= 1e-5 * scale);
        ++checked;
      }
    }
    CHECK(checked == 100);
  }
}

TEST_CASE("path length closed cases") {
  const auto id = MetricField::constant(Mat::Identity(2, 2));
  CHECK(path_length(id, {{make_vec({0, 0}), make_vec({3, 4})}, {}}) == doctest::Approx(5.0).epsilon(1e-15));
  Mat m(2, 2);
  m << 4, 0, 0, 1;
  const auto diag = MetricField::constant(m);
  CHECK(path_length(diag, {{make_vec({0, 0}), make_vec({1, 0})}, {}}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(validate(PolyPath{{make_vec({0, 0})}, {}}), InvalidArgument);
}

TEST_CASE("quadrature self-convergence on fine polylines") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto f = random_field(100 + s, s % 2 == 0 ? MetricMode::kSum : MetricMode::kProduct);
    Engine eng(s);
    PolyPath p;
    Vec a = rand_vec(eng, 2, -3, -2), b = rand_vec(eng, 2, 2, 3);
    for (int k = 0; k <= 40; ++k) p.vertices.push_back(a + (k / 40.0) * (b - a));
    const double l8 = path_length(f, p, {8});
    const double l16 = path_length(f, p, {16});
    CHECK(std::abs(l8 - l16) <= 1e-6 * l16);
  }
}

TEST_CASE("path length gradient matches finite differences") {
  const auto f = random_field(7, MetricMode::kProduct);
  std::vector<Vec> v{make_vec({-2, 0.1}), make_vec({-1, 0.5}), make_vec({0.2, -0.3}), make_vec({1.5, 0.4})};
  std::vector<Vec> g;
  path_length_grad(f, v, g);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (int k = 0; k < 2; ++k) {
      auto vp = v, vm = v;
      const double h = 1e-6;
      vp[i](k) += h;
      vm[i](k) -= h;
      std::vector<Vec> dummy;
      const double fd = (path_length_grad(f, vp, dummy) - path_length_grad(f, vm, dummy)) / (2 * h);
      CHECK(g[i](k) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("geodesics in constant fields") {
  const auto id = MetricField::constant(Mat::Identity(2, 2));
  const auto g = riemannian_geodesic(id, make_vec({0, 0}), make_vec({3, 4}));
  CHECK(std::abs(g.length - 5.0) <= 1e-6);
  Mat m(2, 2);
  m << 4, 0, 0, 1;
  const auto diag = MetricField::constant(m);
  CHECK(std::abs(riemannian_geodesic(diag, make_vec({0, 0}), make_vec({1, 0})).length - 2.0) <= 1e-4);
  Engine eng(12);
  for (int i = 0; i < 10; ++i) {
    Mat a = Mat::Random(2, 2);
    Mat mm = a * a.transpose() + 0.2 * Mat::Identity(2, 2);
    const auto c = MetricField::constant(mm);
    const Vec x = rand_vec(eng, 2, -3, 3), y = rand_vec(eng, 2, -3, 3);
    const double exact = std::sqrt((y - x).dot(mm * (y - x)));
    CHECK(std::abs(riemannian_geodesic(c, x, y).length - exact) <= 1e-4 * exact);
  }
}

TEST_CASE("bump on the chord forces a detour") {
  const auto f = MetricField(MarkedConfiguration::make(Window::cube(2, -10, 10), 0, {make_vec({0, 0})},
                                                        {KernelSpec{1.5, 40.0 * Mat::Identity(2, 2)}}, true),
                             MetricMode::kSum, 1.0);
  const Vec x = make_vec({-3, 0}), y = make_vec({3, 0});
  const auto g = riemannian_geodesic(f, x, y);
  CHECK(g.length < g.chord_length);
  CHECK(!g.chord_returned);
  double far = 0;
  for (const Vec& v : g.path.vertices) far = std::max(far, std::abs(v(1)));
  CHECK(far > 0.5);
  CHECK(g.length >= std::sqrt(f.lambda()) * 6.0);
}

TEST_CASE("random field geodesic invariants") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto f = random_field(40 + s, s == 1 ? MetricMode::kProduct : MetricMode::kSum, 2.0);
    const Vec x = make_vec({-2.5, 0.3}), y = make_vec({2.2, -0.4});
    const auto g = riemannian_geodesic(f, x, y);
    const auto r = riemannian_geodesic(f, y, x);
    CHECK(std::abs(g.length - r.length) <= 1e-8);
    CHECK(g.length >= std::sqrt(f.lambda()) * (y - x).norm());
    CHECK(g.length <= g.chord_length);
    CHECK(g.length <= g.lattice_length);
    CHECK(bit_equal(g.path.vertices.front(), x));
    CHECK(bit_equal(g.path.vertices.back(), y));
    RiemannianOptions fine;
    fine.grid_divisions = 128;
    CHECK(lattice_geodesic(f, x, y, fine).lattice_length <= g.lattice_length + 1e-8);
  }
}

TEST_CASE("corridor leaving the window is reported") {
  MarkLaw law;
  law.amplitude = 30.0;
  const auto f = MetricField(sample_marked(Window::cube(2, -3, 3), 3, law), MetricMode::kSum, 1.0);
  CHECK_THROWS_AS(riemannian_geodesic(f, make_vec({-1.5, 0}), make_vec({1.5, 0})), SolverError);
}

TEST_CASE("unit speed reparametrization") {
  const auto id = MetricField::constant(Mat::Identity(2, 2));
  const auto p = unit_speed_reparametrize(id, {{make_vec({0, 0}), make_vec({3, 4})}, {}});
  CHECK(p.vertices.size() == 6);
  for (std::size_t i = 0; i < 5; ++i) CHECK(p.duration(i) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.total_time() == doctest::Approx(5.0).epsilon(1e-9));
  Mat m(2, 2);
  m << 4, 0, 0, 1;
  const auto diag = MetricField::constant(m);
  const auto q = unit_speed_reparametrize(diag, {{make_vec({0, 0}), make_vec({1, 0})}, {}});
  CHECK(q.vertices.size() == 3);

  const auto f = random_field(9, MetricMode::kSum, 2.0);
  const auto g = riemannian_geodesic(f, make_vec({-2.5, 0.3}), make_vec({2.2, -0.4}));
  const auto u = unit_speed_reparametrize(f, g.path);
  for (std::size_t i = 0; i + 1 < u.vertices.size(); ++i) {
    const double speed = segment_length(f, u.vertices[i], u.vertices[i + 1]) / u.duration(i);
    CHECK(std::abs(speed - 1.0) <= 1e-3);
  }
  CHECK(std::abs(path_length(f, u) - g.length) <= 1e-6 * g.length);
  const auto uu = unit_speed_reparametrize(f, u);
  CHECK(uu.vertices.size() == u.vertices.size());
  CHECK(std::abs(path_length(f, uu) - path_length(f, u)) <= 1e-6 * g.length);
}
