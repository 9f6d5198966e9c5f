// Acceptance gate: one PASS/FAIL line per criterion.
//
//   fpp_acceptance <path to fpp_lab> <source dir> [criterion numbers...]
//
// Every tolerance, seed count and T value used below is pinned here.

#include "fpp/diagnostics.hpp"
#include "fpp/io.hpp"
#include "fpp/lab.hpp"
#include "fpp/shape.hpp"
#include "fpp/shear.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

using namespace fpp;
namespace fs = std::filesystem;

namespace {

// ---- pinned parameters --------------------------------------------------------------

constexpr int kOracleWindows = 200;
constexpr std::size_t kOracleMaxPoints = 6;
constexpr double kOracleTol = 1e-12;
constexpr double kOracleBudget = 60.0;  // seconds

constexpr double kOrthogonalityTol = 1e-9;

constexpr int kMetricTriples = 100;
constexpr double kTriangleTol = 1e-9;
constexpr double kMetricBudget = 120.0;

constexpr int kConstantFields = 10;
constexpr double kConstantDistanceRel = 1e-4;
constexpr double kConstantDerivativeTol = 1e-3;

constexpr int kShearInstances = 50;
constexpr double kShearFdTolBl = 1e-6;
constexpr double kShearFdTolRiem = 1e-4;

constexpr int kChi2Seeds = 500;
constexpr double kChi2Alpha = 1e-3;
constexpr double kInvarianceT = 20.0;
constexpr int kInvarianceSeeds = 200;

constexpr double kConvexityT = 40.0;
constexpr int kConvexityDirections = 16;
constexpr int kConvexitySeeds = 100;
constexpr double kConvexityBudget = 600.0;

constexpr double kSandwichT = 80.0;
constexpr double kSandwichEps = 0.15;
constexpr int kSandwichSeeds = 3;
constexpr int kSandwichScanDirections = 16;
constexpr int kSandwichScanSeeds = 32;
constexpr double kSandwichBudget = 600.0;

constexpr double kDerivativeT = 80.0;
constexpr int kDerivativeSeeds = 400;
constexpr double kDerivativeEps = 0.1;

constexpr int kHessianSeeds = 20;
constexpr int kHessianSamples = 64;
constexpr double kHessianFactor = 2.0;

constexpr int kAnimalCrossSeeds = 10;
constexpr int kAnimalSeeds = 50;
constexpr int kAnimalNMax2d = 8;
constexpr double kAnimalFactor = 2.0;

constexpr std::uint64_t kBaseSeed = 20240601;

// ---- helpers -----------------------------------------------------------------------

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g(double x) { return fmt::format("{:.3g}", x); }

BrokenLineModel bl_model(double intensity = 1.0) {
  BrokenLineModel m;
  m.cost = BrokenLineCost(LagrangianSpec::iso_quad(2, 1.0));
  m.intensity = intensity;
  return m;
}

SamplingOptions sampling(std::uint64_t salt) {
  SamplingOptions o;
  o.base_seed = derive_seed(kBaseSeed, salt);
  o.jobs = 0;
  return o;
}

Vec rand_vec(Engine& eng, int d, double lo, double hi) {
  Vec v(d);
  for (int k = 0; k < d; ++k) v(k) = uniform(eng, lo, hi);
  return v;
}

// ---- criteria ----------------------------------------------------------------------

Outcome c1_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const Window w = Window::cube(2, 0.0, 3.0);
  const std::vector<LagrangianSpec> ls{LagrangianSpec::iso_quad(2, 1.0), LagrangianSpec::quad_plus_quartic(2, 1.0, 0.5),
                                       LagrangianSpec::aniso_quad((Mat(2, 2) << 2.0, 0.3, 0.3, 1.0).finished())};
  double worst = 0.0;
  int binding_mismatch = 0, windows = 0;
  for (int s = 0; s < kOracleWindows; ++s) {
    const BrokenLineCost cost(ls[static_cast<std::size_t>(s) % ls.size()]);
    const auto full = sample_points(w, derive_seed(kBaseSeed + 1, static_cast<std::uint64_t>(s)));
    std::vector<Vec> pts(full.points().begin(), full.points().end());
    if (pts.size() > kOracleMaxPoints) pts.resize(kOracleMaxPoints);
    const auto env = PointConfiguration::from_points(w, pts);
    Engine eng(derive_seed(kBaseSeed + 2, static_cast<std::uint64_t>(s)));
    Vec x = rand_vec(eng, 2, 0.0, 3.0), y = rand_vec(eng, 2, 0.0, 3.0);
    if (s % 5 == 0 && env.size() > 0) x = env[0];
    const auto a = geodesic(env, cost, x, y);
    const auto b = brute_force_geodesic(env, cost, x, y);
    worst = std::max(worst, std::abs(a.action - b.action));
    bool same = a.binding.size() == b.binding.size();
    for (std::size_t i = 0; same && i < a.binding.size(); ++i) same = bit_equal(a.binding[i], b.binding[i]);
    if (!same) ++binding_mismatch;
    ++windows;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {windows == kOracleWindows && worst <= kOracleTol && binding_mismatch == 0 && secs < kOracleBudget,
          fmt::format("{} windows, max |diff| {}, binding mismatches {}, {:.1f} s (budget {} s)", windows, g(worst),
                      binding_mismatch, secs, kOracleBudget)};
}

Outcome c2_closed_form() {
  const BrokenLineModel m = bl_model(0.0);
  const auto empty = PointConfiguration::from_points(2, {});
  const ShearFrame fr(make_vec({1, 0}));
  bool exact = true;
  double worst_formula = 0.0, worst_fd = 0.0;
  for (double t : {10.0, 50.0, 100.0}) {
    const auto geo = geodesic(empty, m.cost, make_vec({0, 0}), make_vec({t, 0}));
    exact = exact && geo.action == 2.0 * t && geo.action / t == 2.0;
    const double formula = grad_B_bl(m.cost, ShearMap(fr, fr.v()), geo.path.vertices)(0) / t;
    const double eps = 0.1;
    const double fd = (action(empty, m.cost, make_vec({0, 0}), t * (fr.v() + eps * fr.h(0))) -
                       action(empty, m.cost, make_vec({0, 0}), t * (fr.v() - eps * fr.h(0)))) /
                      (2.0 * eps * t);
    worst_formula = std::max(worst_formula, std::abs(formula));
    worst_fd = std::max(worst_fd, std::abs(fd));
  }
  return {exact && worst_formula <= kOrthogonalityTol && worst_fd <= kOrthogonalityTol,
          fmt::format("A = 2T exactly: {}; |<grad, h>| formula {} fd {} (tol {})", exact ? "yes" : "no",
                      g(worst_formula), g(worst_fd), g(kOrthogonalityTol))};
}

Outcome c3_metric() {
  const auto t0 = std::chrono::steady_clock::now();
  const Model bl = bl_model();
  const double spread_bl = 8.0;
  const auto env_bl = sample_environment(bl, derive_seed(kBaseSeed, 3), 3 * spread_bl + 20);
  const auto rb = metric_axiom_suite(bl, env_bl, kMetricTriples, spread_bl, derive_seed(kBaseSeed, 31), kTriangleTol);
  RiemannianModel rm;
  rm.law.amplitude = 1.5;
  const Model riem = rm;
  const double spread_r = 3.0;
  const auto env_r = sample_environment(riem, derive_seed(kBaseSeed, 32), 3 * spread_r + 8);
  const auto rr = metric_axiom_suite(riem, env_r, kMetricTriples, spread_r, derive_seed(kBaseSeed, 33), kTriangleTol);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto line = [](const char* name, const MetricAxiomReport& r) {
    return fmt::format("{}: {} triples, sym {}, tri excess {}, pos min {}, id {}", name, r.triples, g(r.symmetry_max),
                       g(r.triangle_max_excess), g(r.positivity_min), g(r.identity_max));
  };
  return {rb.pass && rr.pass && secs < kMetricBudget,
          fmt::format("{}; {}; {:.1f} s (budget {} s)", line("broken-line", rb), line("riemannian", rr), secs,
                      kMetricBudget)};
}

Outcome c4_constant_fields() {
  Engine eng(derive_seed(kBaseSeed, 4));
  double worst_rel = 0.0, worst_der = 0.0;
  for (int i = 0; i < kConstantFields; ++i) {
    const int d = i % 2 == 0 ? 2 : 3;
    Mat a(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a(r, c) = uniform(eng, -1.0, 1.0);
    const Mat mm = a * a.transpose() + 0.2 * Mat::Identity(d, d);
    const auto field = MetricField::constant(mm);
    const Vec x = rand_vec(eng, d, -3, 3), y = rand_vec(eng, d, -3, 3);
    const double exact = std::sqrt((y - x).dot(mm * (y - x)));
    worst_rel = std::max(worst_rel, std::abs(riemannian_distance(field, x, y) - exact) / exact);

    const Vec v = rand_vec(eng, d, 0.5, 1.5);
    const ShearFrame fr(v);
    const double t = 10.0;
    const auto geo = riemannian_geodesic(field, Vec::Zero(d), t * v);
    const PolyPath unit = unit_speed_reparametrize(field, geo.path);
    const Vec grad = mm * v / std::sqrt(v.dot(mm * v));
    for (int j = 0; j < fr.codim(); ++j) {
      const double formula = riem_derivative_formula(field, fr, unit, fr.h(j)) / t;
      worst_der = std::max(worst_der, std::abs(formula - grad.dot(fr.h(j))));
    }
  }
  return {worst_rel <= kConstantDistanceRel && worst_der <= kConstantDerivativeTol,
          fmt::format("{} fields: max rel distance error {} (tol {}), max derivative error {} (tol {})", kConstantFields,
                      g(worst_rel), g(kConstantDistanceRel), g(worst_der), g(kConstantDerivativeTol))};
}

Outcome c5_shear_calculus() {
  Engine eng(derive_seed(kBaseSeed, 5));
  bool det_exact = true, identity_exact = true;
  double worst_bl = 0.0, worst_r = 0.0;
  int n_bl = 0, n_r = 0;
  const std::vector<LagrangianSpec> ls{LagrangianSpec::iso_quad(2, 1.0), LagrangianSpec::quad_plus_quartic(2, 1.0, 0.4),
                                       LagrangianSpec::aniso_quad((Mat(2, 2) << 2.0, 0.4, 0.4, 1.0).finished()),
                                       LagrangianSpec::quad_plus_quartic(3, 0.7, 0.3)};
  const double eps = 1e-5;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  for (int rep = 0; rep < kShearInstances; ++rep) {
    const auto& l = ls[static_cast<std::size_t>(rep) % ls.size()];
    const int d = l.dim();
    const BrokenLineCost cost(l);
    const Vec v = rand_vec(eng, d, -1.5, 1.5);
    const ShearFrame fr(v);
    std::vector<Vec> path{Vec::Zero(d)};
    for (int k = 0; k < 8; ++k) path.push_back(path.back() + rand_vec(eng, d, -1.5, 1.5));
    const auto env = PointConfiguration::from_points(d, {path[3]});
    Eigen::VectorXd t(d - 1);
    for (int k = 0; k < d - 1; ++k) t(k) = uniform(eng, -0.5, 0.5);
    const auto xi = ShearMap::from_coordinates(fr, t);
    det_exact = det_exact && xi.determinant() == 1.0;
    identity_exact = identity_exact && transformed_action_bl(env, cost, ShearMap(fr, v), path) == path_action(env, cost, path);
    const Eigen::VectorXd gr = grad_B_bl(cost, xi, path);
    const Eigen::MatrixXd h = hess_B_bl(cost, xi, path);
    for (int j = 0; j < d - 1; ++j) {
      Eigen::VectorXd tp = t, tm = t;
      tp(j) += eps;
      tm(j) -= eps;
      const auto xp = ShearMap::from_coordinates(fr, tp), xm = ShearMap::from_coordinates(fr, tm);
      const double fd = (transformed_action_bl(env, cost, xp, path) - transformed_action_bl(env, cost, xm, path)) / (2 * eps);
      worst_bl = std::max(worst_bl, rel(gr(j), fd));
      const Eigen::VectorXd fdh = (grad_B_bl(cost, xp, path) - grad_B_bl(cost, xm, path)) / (2 * eps);
      for (int k = 0; k < d - 1; ++k) worst_bl = std::max(worst_bl, rel(h(k, j), fdh(k)));
    }
    ++n_bl;
  }
  MarkLaw law;
  law.amplitude = 1.5;
  for (int rep = 0; rep < kShearInstances; ++rep) {
    const MetricMode mode = rep % 2 == 0 ? MetricMode::kSum : MetricMode::kProduct;
    const MetricField f(sample_marked(Window::cube(2, -8, 8), derive_seed(kBaseSeed + 5, static_cast<std::uint64_t>(rep)), law),
                        mode, 0.7);
    const Vec v = rand_vec(eng, 2, 2, 3);
    const ShearFrame fr(v);
    PolyPath p;
    for (int k = 0; k <= 12; ++k) p.vertices.push_back((k / 12.0) * v);
    p.vertices.back() = v;
    for (std::size_t k = 1; k + 1 < p.vertices.size(); ++k) p.vertices[k] += rand_vec(eng, 2, -0.2, 0.2);
    det_exact = det_exact && ShearMap(fr, v + 0.3 * fr.h(0)).determinant() == 1.0;
    identity_exact = identity_exact && transformed_action_riem(f, ShearMap(fr, v), p) == path_length(f, p);
    Eigen::VectorXd t(1);
    t(0) = uniform(eng, -0.4, 0.4);
    const auto xi = ShearMap::from_coordinates(fr, t);
    Eigen::VectorXd tp = t, tm = t;
    tp(0) += eps;
    tm(0) -= eps;
    const auto xp = ShearMap::from_coordinates(fr, tp), xm = ShearMap::from_coordinates(fr, tm);
    const double fd = (transformed_action_riem(f, xp, p) - transformed_action_riem(f, xm, p)) / (2 * eps);
    worst_r = std::max(worst_r, rel(grad_B_riem(f, xi, p)(0), fd));
    const double fdh = (grad_B_riem(f, xp, p)(0) - grad_B_riem(f, xm, p)(0)) / (2 * eps);
    worst_r = std::max(worst_r, rel(hess_B_riem(f, xi, p)(0, 0), fdh));
    ++n_r;
  }
  return {det_exact && identity_exact && worst_bl <= kShearFdTolBl && worst_r <= kShearFdTolRiem &&
              n_bl >= kShearInstances && n_r >= kShearInstances,
          fmt::format("det = 1 exactly: {}; B(v,v) = A exactly: {}; fd rel error broken-line {} (tol {}, {} instances), "
                      "riemannian {} (tol {}, {} instances)",
                      det_exact ? "yes" : "no", identity_exact ? "yes" : "no", g(worst_bl), g(kShearFdTolBl), n_bl,
                      g(worst_r), g(kShearFdTolRiem), n_r)};
}

Outcome c6_invariance() {
  const Vec v = make_vec({1, 0}), w = make_vec({1, 0.3});
  const auto chi = shear_invariance_chi2(v, w, kChi2Seeds, derive_seed(kBaseSeed, 6), kChi2Alpha);
  const auto inv = invariance_check(bl_model(), v, w, kInvarianceT, kInvarianceSeeds, sampling(61));
  return {chi.pass && inv.overlap,
          fmt::format("chi2 {} on {} dof, p = {} (alpha {}); B^T/T {} +- {}, A/T {} +- {}, 95% overlap: {}",
                      g(chi.statistic), chi.dof, g(chi.p_value), g(kChi2Alpha), g(inv.transformed.mean),
                      g(inv.transformed.stderr_), g(inv.direct.mean), g(inv.direct.stderr_), inv.overlap ? "yes" : "no")};
}

Outcome c7_convexity() {
  const auto t0 = std::chrono::steady_clock::now();
  const Model m = bl_model();
  const auto o = sampling(7);
  const auto e = shape_scan(m, DirectionGrid::make(2, kConvexityDirections), {kConvexityT}, kConvexitySeeds, o);
  Tolerances tol;
  tol.convexity_sigma = 3.0;
  tol.homogeneity_sigma = 3.0;
  tol.bias_slack = 1.0;
  const auto conv = convexity_check(e, kConvexityT, tol);
  const auto hom = homogeneity_check(m, make_vec({0.6, 0.8}), {0.5, 2.0}, kConvexityT, kConvexitySeeds, o, tol);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst_ratio = 0.0;
  for (const auto& tr : conv.triples) worst_ratio = std::max(worst_ratio, tr.violation / tr.tolerance);
  std::string hom_s;
  bool exact = true;
  for (const auto& en : hom.entries) {
    hom_s += fmt::format(" s={}: diff {} tol {} exact {}", g(en.s), g(en.difference), g(en.tolerance), g(en.exact_error));
    exact = exact && en.exact_pass;
  }
  return {conv.pass && hom.pass && secs < kConvexityBudget,
          fmt::format("{} triples, {} violations (worst violation/tolerance {}); homogeneity{}; {:.0f} s (budget {} s)",
                      conv.triples.size(), conv.failures, g(worst_ratio), hom_s, secs, kConvexityBudget)};
}

Outcome c8_sandwich() {
  const auto t0 = std::chrono::steady_clock::now();
  const Model m = bl_model();
  const auto o = sampling(8);
  const auto e = shape_scan(m, DirectionGrid::make(2, kSandwichScanDirections), {kSandwichT}, kSandwichScanSeeds, o);
  const LimitShape shape = limit_shape_from_lambda(e, kSandwichT);
  const auto rays = DirectionGrid::make(2, 64);
  bool pass = true;
  std::string per;
  for (int s = 0; s < kSandwichSeeds; ++s) {
    // Ball environments are independent of the scan's seeds.
    const auto ball = empirical_ball(m, environment_seed(o, 1000 + static_cast<std::uint64_t>(s)), kSandwichT, 1.0, rays, o);
    const auto r = sandwich_check(ball, shape, kSandwichEps);
    pass = pass && r.pass;
    per += fmt::format(" [seed {}: {} pts, misses {}/{}, gauge in-ball max {}, outside min {}]", s, r.points,
                       r.inner_misses, r.outer_misses, g(r.max_gauge_inside), g(r.min_gauge_outside));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {pass && secs < kSandwichBudget,
          fmt::format("eps {}{}; {:.0f} s (budget {} s)", g(kSandwichEps), per, secs, kSandwichBudget)};
}

Outcome c9_derivative() {
  const Model m = bl_model();
  const auto o = sampling(9);
  bool pass = true;
  std::string per;
  for (const Vec& v : {make_vec({1, 0}), make_vec({0.6, 0.8}), make_vec({-0.28, 0.96})}) {
    const auto r = derivative_check(m, ShearFrame(v), {kDerivativeT}, kDerivativeSeeds, kDerivativeEps, o);
    pass = pass && r.pass;
    for (const auto& en : r.entries)
      per += fmt::format(" [v=({},{}): formula {} fd {} diff {} tol {}]", g(v(0)), g(v(1)), g(en.formula.mean),
                         g(en.fd.mean), g(en.difference), g(en.tolerance));
  }
  return {pass, fmt::format("T={}, {} seeds, eps {}:{}", g(kDerivativeT), kDerivativeSeeds, g(kDerivativeEps), per)};
}

Outcome c10_hessian() {
  const std::vector<double> ladder{10, 20, 40, 80};
  const ShearFrame fr(make_vec({1, 0}));
  Tolerances tol;
  tol.hessian_factor = kHessianFactor;
  const auto r = hessian_monitor(bl_model(), fr, ladder, kHessianSamples, kHessianSeeds, sampling(10), tol);
  const auto e = hessian_monitor(bl_model(0.0), fr, ladder, kHessianSamples, 1, sampling(11), tol);
  bool constant = true;
  for (double x : e.m_hat) constant = constant && x == e.m_hat.front();
  std::string ms;
  for (double x : r.m_hat) ms += " " + g(x);
  return {r.pass && constant,
          fmt::format("M(T) ={}; max {} vs {} x median {}; empty environment constant: {} (value {})", ms, g(r.max),
                      g(kHessianFactor), g(r.median), constant ? "yes" : "no", g(e.m_hat.front()))};
}

Outcome c11_animals() {
  bool agree = true;
  for (int d : {2, 3}) {
    const int n = 5;
    for (int s = 0; s < kAnimalCrossSeeds; ++s) {
      const auto pts = sample_points(Window::cube(d, -(n + 1), n + 2), derive_seed(kBaseSeed + 11, static_cast<std::uint64_t>(s * 4 + d)));
      const auto f = poisson_count_field(pts);
      const auto a = lattice_animal_max(f, d, n);
      const auto b = lattice_animal_max_bfs(f, d, n);
      agree = agree && a.max == b.max && a.sets == b.sets;
    }
  }
  AnimalReport mean;
  for (int s = 0; s < kAnimalSeeds; ++s) {
    const auto pts = sample_points(Window::cube(2, -(kAnimalNMax2d + 1), kAnimalNMax2d + 2),
                                   derive_seed(kBaseSeed + 12, static_cast<std::uint64_t>(s)));
    const auto r = lattice_animal_max(poisson_count_field(pts), 2, kAnimalNMax2d);
    if (s == 0) {
      mean = r;
      std::fill(mean.max.begin(), mean.max.end(), 0.0);
    }
    for (std::size_t i = 0; i < r.max.size(); ++i) mean.max[i] += r.max[i];
  }
  std::string ratios;
  for (std::size_t i = 0; i < mean.max.size(); ++i) {
    mean.max[i] /= kAnimalSeeds;
    mean.ratio[i] = mean.max[i] / mean.n[i];
    ratios += " " + g(mean.ratio[i]);
  }
  const bool bounded = animal_ratio_bounded(mean, kAnimalFactor);
  return {agree && bounded,
          fmt::format("DFS = BFS for n <= 5 in 2D and 3D ({} fields each): {}; mean max/n over {} seeds, n = 1..{}:{}; "
                      "bounded by {} x early max: {}",
                      kAnimalCrossSeeds, agree ? "yes" : "no", kAnimalSeeds, kAnimalNMax2d, ratios, g(kAnimalFactor),
                      bounded ? "yes" : "no")};
}

Outcome c12_reproducibility(const std::string& lab, const std::string& src) {
  const fs::path work = fs::temp_directory_path() / fmt::format("fpp_acceptance_{}", ::getpid());
  fs::remove_all(work);
  const std::string config = (fs::path(src) / "configs" / "smoke.json").string();
  auto run = [&](const std::string& name, int jobs) {
    const std::string cmd = fmt::format("\"{}\" run --config \"{}\" --out \"{}\" --jobs {} --quiet", lab, config,
                                        (work / name).string(), jobs);
    return std::system(cmd.c_str());
  };
  const int e1 = run("a", 1), e2 = run("b", 1), e3 = run("c", 8);
  auto files = [&](const std::string& name) {
    std::set<std::string> out;
    for (const auto& p : fs::recursive_directory_iterator(work / name))
      if (p.is_regular_file() && p.path().filename() != "manifest.json")
        out.insert(fs::relative(p.path(), work / name).string());
    return out;
  };
  const auto fa = files("a");
  bool same = !fa.empty() && fa == files("b") && fa == files("c");
  std::size_t compared = 0;
  for (const auto& f : fa) {
    if (!same) break;
    const std::string a = read_text_file((work / "a" / f).string());
    same = a == read_text_file((work / "b" / f).string()) && a == read_text_file((work / "c" / f).string());
    ++compared;
  }
  fs::remove_all(work);
  return {e1 == 0 && e2 == 0 && e3 == 0 && same,
          fmt::format("exit codes {}/{}/{}; {} artifacts byte-identical across two runs and --jobs 1 vs 8: {}", e1, e2,
                      e3, compared, same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    fmt::print(stderr, "usage: fpp_acceptance <fpp_lab> <source dir> [criteria...]\n");
    return 2;
  }
  const std::string lab = argv[1], src = argv[2];
  std::set<int> only;
  for (int i = 3; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence with brute force", c1_oracle},
      {"closed form in the empty environment", c2_closed_form},
      {"metric axioms", c3_metric},
      {"constant Riemannian fields", c4_constant_fields},
      {"shear calculus", c5_shear_calculus},
      {"distributional shear invariance", c6_invariance},
      {"convexity and homogeneity", c7_convexity},
      {"limit-shape sandwich", c8_sandwich},
      {"differentiability check", c9_derivative},
      {"Hessian monitor", c10_hessian},
      {"lattice-animal diagnostic", c11_animals},
      {"reproducibility", [&] { return c12_reproducibility(lab, src); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("{} {:>2} {}: {} [{:.1f} s]\n", r.pass ? "PASS" : "FAIL", id, criteria[i].first, r.detail, secs);
    std::fflush(stdout);
    if (!r.pass) ++failed;
  }
  fmt::print("{} criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
