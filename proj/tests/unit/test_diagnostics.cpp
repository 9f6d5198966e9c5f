#include "doctest.h"

#include "fpp/diagnostics.hpp"

#include <cmath>

using namespace fpp;

namespace {

BrokenLineModel bl_model() {
  BrokenLineModel m;
  m.cost = BrokenLineCost(LagrangianSpec::iso_quad(2, 1.0));
  return m;
}

}  // namespace

TEST_CASE("metric axioms in the empty and sampled environments") {
  BrokenLineModel empty = bl_model();
  empty.intensity = 0.0;
  const Model me = empty;
  const auto re = metric_axiom_suite(me, sample_environment(me, 1, 20), 20, 4.0, 3, 0.0);
  CHECK(re.pass);
  CHECK(re.degenerate_max == 0.0);
  const Model m = bl_model();
  const auto r = metric_axiom_suite(m, sample_environment(m, 2, 20), 30, 5.0, 4, 1e-9);
  CHECK(r.pass);
  CHECK(r.symmetry_max == 0.0);
  CHECK(r.positivity_min > 0.0);
  RiemannianModel rm;
  const Model mr = rm;
  const auto rr = metric_axiom_suite(mr, sample_environment(mr, 3, 12), 4, 3.0, 5, 1e-6);
  CHECK(rr.pass);
}

TEST_CASE("riemannian triangle whose lattice optimum sits in the wrong basin") {
  // The lattice's best y-z path misses the corridor through x; only the
  // multi-start refinement finds it.
  RiemannianModel rm;
  rm.law.amplitude = 1.5;
  const Model m = rm;
  const auto env = sample_environment(m, derive_seed(20240601, 32), 17);
  const Vec x = make_vec({2.0278219506525277, 0.026904651951439096});
  const Vec y = make_vec({2.991912463920271, 1.7515194144374764});
  const Vec z = make_vec({-1.071539926397664, -2.9618439765865743});
  const auto yz = riemannian_geodesic(env.field, y, z, rm.opts);
  CHECK(yz.starts > 1);
  CHECK(yz.length <= min_action(m, env, x, y) + min_action(m, env, x, z));
}

TEST_CASE("exact orientation and collinearity") {
  CHECK(orientation_exact(make_vec({0, 0}), make_vec({1, 0}), make_vec({0, 1})) == 1);
  CHECK(orientation_exact(make_vec({0, 0}), make_vec({0, 1}), make_vec({1, 0})) == -1);
  // Points on y = x/3 that are not representable exactly still have an exact answer.
  const Vec a = make_vec({0.1, 0.1 / 3}), b = make_vec({0.2, 0.2 / 3}), c = make_vec({0.4, 0.4 / 3});
  const double det = (b(0) - a(0)) * (c(1) - a(1)) - (b(1) - a(1)) * (c(0) - a(0));
  CHECK(std::abs(det) < 1e-17);
  const int o = orientation_exact(a, b, c);
  CHECK((o == 0 || o == 1 || o == -1));
  // Exactly collinear dyadic points.
  CHECK(collinear(make_vec({0.5, 0.25}), make_vec({1.5, 0.75}), make_vec({3.0, 1.5})));
  CHECK(collinear(make_vec({1e300, 1e-300}), make_vec({2e300, 2e-300}), make_vec({0, 0})));
  CHECK_FALSE(collinear(make_vec({0, 0}), make_vec({1, 1}), make_vec({2, std::nextafter(2.0, 3.0)})));
  CHECK(collinear(make_vec({0, 0, 0}), make_vec({1, 2, 3}), make_vec({2, 4, 6})));
  CHECK_FALSE(collinear(make_vec({0, 0, 0}), make_vec({1, 2, 3}), make_vec({2, 4, 6.5})));
  CHECK(collinear(make_vec({0, 0}), make_vec({1, 1}), make_vec({2, 2.001}), 0.01));
}

TEST_CASE("collinear triple scan") {
  const auto generic = sample_points(Window::cube(2, 0, 5), 8);
  REQUIRE(generic.size() <= 200);
  CHECK(collinear_triples(generic).empty());
  const auto crafted = PointConfiguration::from_points(
      2, {make_vec({0, 0}), make_vec({1, 1}), make_vec({2, 2}), make_vec({0, 3}), make_vec({5, 1})});
  const auto t = collinear_triples(crafted);
  REQUIRE(t.size() == 1);
  const auto two = PointConfiguration::from_points(2, {make_vec({0, 0}), make_vec({1, 1})});
  CHECK(collinear_triples(two).empty());
}

TEST_CASE("lattice animals: closed forms") {
  const auto ones = lattice_animal_max([](const Cell&) { return 1.0; }, 2, 6);
  for (std::size_t i = 0; i < ones.n.size(); ++i) {
    CHECK(ones.max[i] == ones.n[i]);
    CHECK(ones.ratio[i] == 1.0);
  }
  const auto spike = lattice_animal_max([](const Cell& k) { return k == Cell{0, 0, 0} ? 1.0 : 0.0; }, 2, 5);
  for (double x : spike.max) CHECK(x == 1.0);
  // Fixed *-connected sets containing the origin: n times the fixed counts 1, 4, 20, 110.
  CHECK(ones.sets[0] == 1);
  CHECK(ones.sets[1] == 8);
  CHECK(ones.sets[2] == 60);
  CHECK(ones.sets[3] == 440);
}

TEST_CASE("lattice animals: depth-first equals breadth-first") {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto env = sample_points(Window::cube(2, -9, 10), 40 + s);
    const auto f = poisson_count_field(env);
    const auto a = lattice_animal_max(f, 2, 5);
    const auto b = lattice_animal_max_bfs(f, 2, 5);
    CHECK(a.max == b.max);
    CHECK(a.sets == b.sets);
  }
  Engine eng(5);
  std::vector<double> vals(11 * 11 * 11);
  // Dyadic values keep every sum exact regardless of summation order.
  for (auto& v : vals) v = std::floor(uniform01(eng) * 1024.0) / 1024.0;
  auto f3 = [&](const Cell& k) { return vals[static_cast<std::size_t>(((k[2] + 5) * 11 + k[1] + 5) * 11 + k[0] + 5)]; };
  const auto a3 = lattice_animal_max(f3, 3, 4);
  const auto b3 = lattice_animal_max_bfs(f3, 3, 4);
  CHECK(a3.max == b3.max);
  CHECK(a3.sets == b3.sets);
  CHECK(a3.sets[1] == 26);
  CHECK_THROWS_AS(lattice_animal_max(f3, 2, 9), InvalidArgument);
}

TEST_CASE("localization audit") {
  const BrokenLineCost cost(LagrangianSpec::iso_quad(2, 1.0));
  const auto env = sample_points(Window::cube(2, -40, 40), 6);
  std::vector<std::pair<Vec, Vec>> pairs{{make_vec({0, 0}), make_vec({10, 3})},
                                         {make_vec({-5, 2}), make_vec({6, -4})},
                                         {make_vec({-30, 0}), make_vec({30, 0})}};
  const auto r = localization_audit(env, cost, pairs);
  CHECK(r.pass);
  CHECK(r.entries[0].certified);
  CHECK(r.entries[0].resolved);
  CHECK(r.entries[0].difference == 0.0);
  const auto empty = PointConfiguration::from_points(2, {});
  const auto re = localization_audit(empty, cost, pairs);
  for (const auto& e : re.entries) CHECK(e.certified);
}
