#include "fpp/shape.hpp"

#include "fpp/parallel.hpp"
#include "fpp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fpp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const BrokenLineModel* as_bl(const Model& m) { return std::get_if<BrokenLineModel>(&m); }
const RiemannianModel* as_riem(const Model& m) { return std::get_if<RiemannianModel>(&m); }

// Runs fn on environments of growing windows until it stops raising
// SolverError. Cellwise sampling keeps the realisation fixed.
template <class Fn>
auto with_window(const Model& m, std::uint64_t seed, double half_width, const SamplingOptions& o, Fn&& fn,
                 int* retries = nullptr) {
  double hw = std::ceil(half_width);
  for (int attempt = 0;; ++attempt) {
    const Environment env = sample_environment(m, seed, hw);
    try {
      if (retries != nullptr) *retries = attempt;
      return fn(env);
    } catch (const SolverError&) {
      if (attempt >= o.max_retries) throw;
    }
    hw = std::ceil(hw * o.window_growth);
  }
}

// Largest sup-norm of the preimage of a corner of the unit cube.
double preimage_stretch(const ShearMap& xi) {
  const int d = xi.frame().dim();
  double s = 0.0;
  for (int mask = 0; mask < (1 << d); ++mask) {
    Vec c(d);
    for (int k = 0; k < d; ++k) c(k) = (mask >> k) & 1 ? 1.0 : -1.0;
    s = std::max(s, xi.inverse_apply(c).cwiseAbs().maxCoeff());
  }
  return s;
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

nlohmann::json vec_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

Eigen::VectorXd grad_at_identity(const Model& m, const Environment& env, const ShearFrame& frame,
                                 const std::vector<Vec>& path) {
  const ShearMap id(frame, frame.v());
  if (const auto* bl = as_bl(m)) return grad_B_bl(bl->cost, id, path);
  return grad_B_riem(env.field, id, PolyPath{path, {}}, as_riem(m)->opts.quadrature);
}

}  // namespace

// ---- models and environments -------------------------------------------------------

int model_dim(const Model& m) {
  if (const auto* bl = as_bl(m)) return bl->cost.lagrangian.dim();
  return as_riem(m)->dim;
}

bool is_broken_line(const Model& m) { return as_bl(m) != nullptr; }

nlohmann::json to_json(const Model& m) {
  if (const auto* bl = as_bl(m))
    return {{"type", "broken_line"},
            {"lagrangian", to_json(bl->cost.lagrangian)},
            {"penalty", bl->cost.penalty},
            {"step_bound", bl->cost.r},
            {"intensity", bl->intensity}};
  const auto* r = as_riem(m);
  return {{"type", "riemannian"},
          {"dim", r->dim},
          {"mode", mode_name(r->mode)},
          {"lambda", r->lambda},
          {"kernel_radius", r->law.radius},
          {"kernel_amplitude", r->law.amplitude},
          {"intensity", r->intensity},
          {"grid_divisions", r->opts.grid_divisions},
          {"quadrature_subintervals", r->opts.quadrature.subintervals}};
}

Environment sample_environment(const Model& m, std::uint64_t seed, double half_width) {
  const double hw = std::ceil(half_width);
  const Window w = Window::centered(Vec::Zero(model_dim(m)), hw);
  Environment env;
  env.half_width = hw;
  if (const auto* bl = as_bl(m)) {
    env.points = sample_points_cellwise(w, seed, bl->intensity);
  } else {
    const auto* r = as_riem(m);
    env.field = MetricField(sample_marked_cellwise(w, seed, r->law, r->intensity), r->mode, r->lambda);
  }
  return env;
}

Environment push_environment(const Model& m, const Environment& env, const ShearMap& xi,
                             double target_half_width) {
  const Window target = Window::centered(Vec::Zero(model_dim(m)), target_half_width);
  Environment out;
  out.half_width = target_half_width;
  if (is_broken_line(m)) {
    out.points = shear_pushforward(env.points, xi, target);
  } else {
    const auto* r = as_riem(m);
    out.field = MetricField(shear_pushforward(env.field.marks(), xi, target), r->mode, r->lambda);
  }
  return out;
}

Solve solve(const Model& m, const Environment& env, const Vec& x, const Vec& y) {
  Solve s;
  if (const auto* bl = as_bl(m)) {
    auto g = geodesic(env.points, bl->cost, x, y, bl->opts);
    s.action = g.action;
    s.path = std::move(g.path.vertices);
  } else {
    auto g = riemannian_geodesic(env.field, x, y, as_riem(m)->opts);
    s.action = g.length;
    s.path = std::move(g.path.vertices);
  }
  return s;
}

double min_action(const Model& m, const Environment& env, const Vec& x, const Vec& y) {
  if (const auto* bl = as_bl(m)) return action(env.points, bl->cost, x, y, bl->opts);
  return riemannian_distance(env.field, x, y, as_riem(m)->opts);
}

std::uint64_t environment_seed(const SamplingOptions& o, std::uint64_t s) { return derive_seed(o.base_seed, s); }

double initial_half_width(const Model& m, double reach) {
  if (is_broken_line(m)) return std::ceil(0.5 * reach + 1.25 * (0.5 * reach + std::max(3.0, 0.6 * reach)) + 2.0);
  return std::ceil(1.5 * reach + 2.0 * as_riem(m)->law.radius + 3.0);
}

SolveGroup solve_from_origin(const Model& m, std::uint64_t env_seed, const std::vector<Vec>& targets,
                             const SamplingOptions& o) {
  const int d = model_dim(m);
  double reach = 0.0;
  for (const Vec& t : targets) {
    if (t.size() != d) throw InvalidArgument("solve_from_origin: target dimension mismatch");
    reach = std::max(reach, t.norm());
  }
  SolveGroup g;
  g.env = with_window(
      m, env_seed, initial_half_width(m, reach), o,
      [&](const Environment& env) {
        std::vector<Solve> out;
        for (const Vec& t : targets) out.push_back(solve(m, env, Vec::Zero(d), t));
        g.solves = std::move(out);
        return env;
      },
      &g.retries);
  return g;
}

// ---- direction grids and estimates -----------------------------------------------

DirectionGrid DirectionGrid::make(int d, int m, bool antipodal) {
  if (d != 2 && d != 3) throw InvalidArgument("direction grid: d must be 2 or 3");
  if (m < 1) throw InvalidArgument("direction grid: need at least one direction");
  if (antipodal && m % 2 != 0) throw InvalidArgument("direction grid: antipodal grids need even m");
  DirectionGrid g;
  g.d = d;
  g.antipodal = antipodal;
  if (d == 2) {
    // Equal angles are antipodally closed whenever m is even.
    for (int k = 0; k < m; ++k) {
      const double th = 2.0 * std::numbers::pi * k / m;
      g.directions.push_back(make_vec({std::cos(th), std::sin(th)}));
    }
    return g;
  }
  const int n = antipodal ? m / 2 : m;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / (antipodal ? 2.0 * n : n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double th = golden * k;
    Vec u = make_vec({r * std::cos(th), r * std::sin(th), z});
    g.directions.push_back(u / u.norm());
  }
  if (antipodal)
    for (int k = 0; k < n; ++k) g.directions.push_back(-g.directions[static_cast<std::size_t>(k)]);
  return g;
}

Stat summarize(const std::vector<double>& xs) {
  Stat s;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / (s.n - 1) / s.n);
  }
  return s;
}

LambdaEstimate estimate_lambda(const Model& m, const Vec& v, double t, int seeds, const SamplingOptions& o) {
  if (!(t > 0.0)) throw InvalidArgument("estimate_lambda: T must be positive");
  if (seeds < 1) throw InvalidArgument("estimate_lambda: need at least one seed");
  if (v.size() != model_dim(m)) throw InvalidArgument("estimate_lambda: dimension mismatch");
  LambdaEstimate e;
  e.values = run_tasks<double>(static_cast<std::size_t>(seeds), o.jobs, [&](std::size_t s) {
    return solve_from_origin(m, environment_seed(o, s), {t * v}, o).solves[0].action / t;
  });
  e.stat = summarize(e.values);
  return e;
}

Stat ShapeEstimate::cell(int k, int j) const {
  return summarize(values[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]);
}

int ShapeEstimate::t_index(double t) const {
  for (std::size_t j = 0; j < t_ladder.size(); ++j)
    if (t_ladder[j] == t) return static_cast<int>(j);
  throw InvalidArgument("shape estimate: T is not on the ladder");
}

ShapeEstimate shape_scan(const Model& m, const DirectionGrid& grid, const std::vector<double>& t_ladder,
                         int seeds, const SamplingOptions& o) {
  if (grid.d != model_dim(m)) throw InvalidArgument("shape_scan: grid dimension mismatch");
  if (seeds < 1 || t_ladder.empty()) throw InvalidArgument("shape_scan: need seeds and a T ladder");
  for (double t : t_ladder)
    if (!(t > 0.0)) throw InvalidArgument("shape_scan: T must be positive");
  const std::size_t nt = t_ladder.size(), ns = static_cast<std::size_t>(seeds);
  // One task per (T, seed); every direction of a task shares its environment.
  auto rows = run_tasks<std::vector<double>>(nt * ns, o.jobs, [&](std::size_t task) {
    const double t = t_ladder[task / ns];
    std::vector<Vec> targets;
    for (const Vec& u : grid.directions) targets.push_back(t * u);
    const auto g = solve_from_origin(m, environment_seed(o, task % ns), targets, o);
    std::vector<double> out;
    for (const auto& s : g.solves) out.push_back(s.action / t);
    return out;
  });
  ShapeEstimate e;
  e.model = to_json(m);
  e.grid = grid;
  e.t_ladder = t_ladder;
  e.values.assign(grid.directions.size(), std::vector<std::vector<double>>(nt, std::vector<double>(ns)));
  for (std::size_t task = 0; task < rows.size(); ++task)
    for (std::size_t k = 0; k < grid.directions.size(); ++k) e.values[k][task / ns][task % ns] = rows[task][k];
  return e;
}

// ---- limit shapes ---------------------------------------------------------------

double LimitShape::gauge(const Vec& z) const {
  if (z.size() != 2) throw InvalidArgument("limit shape gauge: 2D only");
  const double nz = z.norm();
  if (nz == 0.0) return 0.0;
  const Vec u = z / nz;
  double best = kInf;
  const std::size_t n = boundary.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& a = boundary[i];
    const Vec& b = boundary[(i + 1) % n];
    // Solve r u = a + s (b - a) for r > 0, s in [0, 1].
    const Vec e = b - a;
    const double det = u(0) * (-e(1)) - u(1) * (-e(0));
    if (det == 0.0) continue;
    const double r = (a(0) * (-e(1)) - a(1) * (-e(0))) / det;
    const double s = (u(0) * a(1) - u(1) * a(0)) / det;
    if (r > 0.0 && s >= -1e-12 && s <= 1.0 + 1e-12) best = std::min(best, r);
  }
  if (!std::isfinite(best)) throw InvalidArgument("limit shape gauge: ray misses the boundary");
  return nz / best;
}

LimitShape limit_shape_from_lambda(const ShapeEstimate& e, double t) {
  const int j = e.t_index(t);
  LimitShape s;
  s.source = "lambda";
  s.t = t;
  for (int k = 0; k < e.grid.size(); ++k) {
    const double lam = e.cell(k, j).mean;
    if (!(lam > 0.0) || !std::isfinite(lam)) throw SolverError("limit shape: nonpositive Lambda estimate", 0.0);
    s.boundary.push_back(e.grid.directions[static_cast<std::size_t>(k)] / lam);
  }
  return s;
}

EmpiricalBall empirical_ball(const Model& m, const Environment& env, double t, double grid_step,
                             const DirectionGrid& rays) {
  const auto* bl = as_bl(m);
  if (bl == nullptr || model_dim(m) != 2 || rays.d != 2)
    throw InvalidArgument("empirical_ball: broken-line model in 2D only");
  if (!(t > 0.0) || !(grid_step > 0.0)) throw InvalidArgument("empirical_ball: T and grid step must be positive");
  double radius = t;
  for (;;) {
    const long n = static_cast<long>(std::ceil(radius / grid_step));
    std::vector<Vec> queries;
    std::vector<Vec> grid;
    for (long i = -n; i <= n; ++i)
      for (long j = -n; j <= n; ++j) grid.push_back(make_vec({grid_step * i, grid_step * j}));
    for (const Vec& z : grid)
      if (z.norm() <= radius && z.norm() > 0.0) queries.push_back(z);
    const std::size_t n_grid_queries = queries.size();
    std::vector<std::pair<std::size_t, std::size_t>> ray_span;
    for (const Vec& u : rays.directions) {
      const std::size_t first = queries.size();
      for (long k = 1; grid_step * k <= radius; ++k) queries.push_back(grid_step * k * u);
      ray_span.emplace_back(first, queries.size());
    }
    const auto ss = single_source(env.points, bl->cost, Vec::Zero(2), radius, t, queries, bl->opts);
    if (!(ss.exit_lower_bound > t)) {
      radius *= 1.25;
      continue;
    }
    EmpiricalBall b;
    b.t = t;
    b.grid_step = grid_step;
    b.search_radius = radius;
    std::size_t q = 0;
    for (const Vec& z : grid) {
      double a = kInf;
      if (z.norm() == 0.0)
        a = 0.0;
      else if (z.norm() <= radius)
        a = ss.query_dist[q++];
      b.points.push_back(z);
      b.action.push_back(a <= t ? a : kInf);
    }
    if (q != n_grid_queries) throw Error("empirical_ball: query bookkeeping mismatch");
    b.shape.source = "empirical_ball";
    b.shape.t = t;
    for (std::size_t k = 0; k < rays.directions.size(); ++k) {
      // Last ray point before the first one outside the ball.
      double r = 0.0;
      for (std::size_t i = ray_span[k].first; i < ray_span[k].second; ++i) {
        if (!(ss.query_dist[i] <= t)) break;
        r = grid_step * static_cast<double>(i - ray_span[k].first + 1);
      }
      b.shape.boundary.push_back(rays.directions[k] * (r / t));
    }
    return b;
  }
}

EmpiricalBall empirical_ball(const Model& m, std::uint64_t env_seed, double t, double grid_step,
                             const DirectionGrid& rays, const SamplingOptions& o) {
  return with_window(m, env_seed, initial_half_width(m, t), o,
                     [&](const Environment& env) { return empirical_ball(m, env, t, grid_step, rays); });
}

SandwichReport sandwich_check(const EmpiricalBall& ball, const LimitShape& shape, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("sandwich_check: epsilon must lie in (0, 1)");
  SandwichReport r;
  r.epsilon = epsilon;
  r.min_gauge_outside = kInf;
  double rmax = 0.0;
  for (const Vec& p : shape.boundary) rmax = std::max(rmax, p.norm());
  const long n_ball = static_cast<long>(std::lround(std::sqrt(static_cast<double>(ball.points.size())) - 1) / 2);
  const long n = std::max(n_ball, static_cast<long>(std::ceil(rmax * (1.0 + epsilon) * ball.t / ball.grid_step)) + 1);
  for (long i = -n; i <= n; ++i)
    for (long j = -n; j <= n; ++j) {
      const Vec z = make_vec({ball.grid_step * i, ball.grid_step * j});
      bool in = false;
      if (std::abs(i) <= n_ball && std::abs(j) <= n_ball)
        in = ball.inside(static_cast<std::size_t>((i + n_ball) * (2 * n_ball + 1) + (j + n_ball)));
      // Points outside the stored square lie beyond the certified search radius.
      const double g = shape.gauge(z / ball.t);
      ++r.points;
      if (in) {
        r.max_gauge_inside = std::max(r.max_gauge_inside, g);
        if (g > 1.0 + epsilon) ++r.outer_misses;
      } else {
        r.min_gauge_outside = std::min(r.min_gauge_outside, g);
        if (g <= 1.0 - epsilon) ++r.inner_misses;
      }
    }
  r.pass = r.inner_misses == 0 && r.outer_misses == 0;
  return r;
}

// ---- checks -----------------------------------------------------------------------

ConvexityReport convexity_check(const ShapeEstimate& e, double t, const Tolerances& tol) {
  if (e.grid.d != 2) throw InvalidArgument("convexity_check: 2D grids only");
  const int jt = e.t_index(t);
  const int m = e.grid.size();
  ConvexityReport rep;
  rep.t = t;
  const auto& dirs = e.grid.directions;
  for (int i = 0; i < m; ++i)
    for (int gap = 2; gap < m; ++gap) {
      const int k = (i + gap) % m;
      const Vec& ui = dirs[static_cast<std::size_t>(i)];
      const Vec& uk = dirs[static_cast<std::size_t>(k)];
      const double cross = ui(0) * uk(1) - ui(1) * uk(0);
      // Outer directions counter-clockwise and at most a quarter turn apart.
      if (!(cross > 0.0) || ui.dot(uk) < -1e-12) break;
      for (int g2 = 1; g2 < gap; ++g2) {
        const int j = (i + g2) % m;
        const Vec& uj = dirs[static_cast<std::size_t>(j)];
        ConvexityTriple tr;
        tr.i = i;
        tr.j = j;
        tr.k = k;
        tr.a = (uj(0) * uk(1) - uj(1) * uk(0)) / cross;
        tr.b = (ui(0) * uj(1) - ui(1) * uj(0)) / cross;
        const auto& vi = e.values[static_cast<std::size_t>(i)][static_cast<std::size_t>(jt)];
        const auto& vj = e.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(jt)];
        const auto& vk = e.values[static_cast<std::size_t>(k)][static_cast<std::size_t>(jt)];
        std::vector<double> defect(vi.size());
        for (std::size_t s = 0; s < vi.size(); ++s) defect[s] = vj[s] - tr.a * vi[s] - tr.b * vk[s];
        tr.defect = summarize(defect);
        tr.violation = std::max(0.0, tr.defect.mean);
        tr.tolerance = tol.convexity_sigma * tr.defect.stderr_ + tol.bias_slack / t;
        tr.pass = tr.violation <= tr.tolerance;
        if (!tr.pass) ++rep.failures;
        rep.triples.push_back(tr);
      }
    }
  rep.pass = rep.failures == 0 && !rep.triples.empty();
  return rep;
}

HomogeneityReport homogeneity_check(const Model& m, const Vec& v, const std::vector<double>& s_list, double t,
                                    int seeds, const SamplingOptions& o, const Tolerances& tol) {
  if (!(t > 0.0) || seeds < 1) throw InvalidArgument("homogeneity_check: need T > 0 and seeds");
  for (double s : s_list)
    if (!(s > 0.0)) throw InvalidArgument("homogeneity_check: scale factors must be positive");
  const std::size_t ns = s_list.size();
  // Per seed: A(0, T v), then A(0, T (s v)) and A(0, (s T) v) for each s.
  auto rows = run_tasks<std::vector<double>>(static_cast<std::size_t>(seeds), o.jobs, [&](std::size_t seed) {
    std::vector<Vec> targets{t * v};
    for (double s : s_list) {
      targets.push_back(t * (s * v));
      targets.push_back((s * t) * v);
    }
    const auto g = solve_from_origin(m, environment_seed(o, seed), targets, o);
    std::vector<double> out;
    for (const auto& sv : g.solves) out.push_back(sv.action);
    return out;
  });
  HomogeneityReport rep;
  rep.pass = true;
  for (std::size_t i = 0; i < ns; ++i) {
    const double s = s_list[i];
    HomogeneityEntry en;
    en.s = s;
    std::vector<double> lhs, rhs;
    for (const auto& row : rows) {
      const double a_sv = row[1 + 2 * i], a_st = row[2 + 2 * i];
      en.exact_error = std::max(en.exact_error, std::abs(a_sv / t - s * (a_st / (s * t))));
      lhs.push_back(a_sv / t);
      rhs.push_back(s * row[0] / t);
    }
    en.lhs = summarize(lhs);
    en.rhs = summarize(rhs);
    en.difference = en.lhs.mean - en.rhs.mean;
    en.tolerance = tol.homogeneity_sigma * std::hypot(en.lhs.stderr_, en.rhs.stderr_) +
                   tol.bias_slack * std::max(1.0, s) / t;
    en.exact_pass = en.exact_error <= tol.homogeneity_exact;
    en.pass = en.exact_pass && std::abs(en.difference) <= en.tolerance;
    rep.pass = rep.pass && en.pass;
    rep.entries.push_back(en);
  }
  return rep;
}

DerivativeReport derivative_check(const Model& m, const ShearFrame& frame, const std::vector<double>& t_ladder,
                                  int seeds, double epsilon, const SamplingOptions& o,
                                  const Tolerances& tol) {
  if (!(epsilon > 0.0 && epsilon < frame.delta() / 4.0))
    throw InvalidArgument("derivative_check: finite-difference step must lie in (0, delta/4)");
  if (frame.dim() != model_dim(m)) throw InvalidArgument("derivative_check: dimension mismatch");
  if (seeds < 1 || t_ladder.empty()) throw InvalidArgument("derivative_check: need seeds and a T ladder");
  const Vec& v = frame.v();
  const int mc = frame.codim();
  const std::size_t nt = t_ladder.size(), ns = static_cast<std::size_t>(seeds);
  // Per (T, seed): formula value and finite difference for each h_j.
  auto rows = run_tasks<std::vector<double>>(nt * ns, o.jobs, [&](std::size_t task) {
    const double t = t_ladder[task / ns];
    std::vector<Vec> targets{t * v};
    for (int j = 0; j < mc; ++j) {
      targets.push_back(t * (v + epsilon * frame.h(j)));
      targets.push_back(t * (v - epsilon * frame.h(j)));
    }
    const auto g = solve_from_origin(m, environment_seed(o, task % ns), targets, o);
    const Eigen::VectorXd grad = grad_at_identity(m, g.env, frame, g.solves[0].path);
    std::vector<double> out;
    for (int j = 0; j < mc; ++j) {
      out.push_back(grad(j) / t);
      const auto jj = static_cast<std::size_t>(j);
      out.push_back((g.solves[1 + 2 * jj].action - g.solves[2 + 2 * jj].action) / (2.0 * epsilon * t));
    }
    return out;
  });
  DerivativeReport rep;
  rep.epsilon = epsilon;
  rep.pass = true;
  for (std::size_t it = 0; it < nt; ++it)
    for (int j = 0; j < mc; ++j) {
      std::vector<double> a, b;
      for (std::size_t s = 0; s < ns; ++s) {
        a.push_back(rows[it * ns + s][2 * static_cast<std::size_t>(j)]);
        b.push_back(rows[it * ns + s][2 * static_cast<std::size_t>(j) + 1]);
      }
      DerivativeEntry en;
      en.v = v;
      en.j = j;
      en.t = t_ladder[it];
      en.formula = summarize(a);
      en.fd = summarize(b);
      en.difference = en.formula.mean - en.fd.mean;
      en.combined_stderr = std::hypot(en.formula.stderr_, en.fd.stderr_);
      en.tolerance = tol.derivative_sigma * en.combined_stderr +
                     tol.derivative_relative * std::abs(en.fd.mean) + tol.derivative_absolute;
      en.pass = std::abs(en.difference) <= en.tolerance;
      rep.pass = rep.pass && en.pass;
      rep.entries.push_back(en);
    }
  return rep;
}

HessianReport hessian_monitor(const Model& m, const ShearFrame& frame, const std::vector<double>& t_ladder,
                              int n_w_samples, int seeds, const SamplingOptions& o, const Tolerances& tol) {
  if (frame.dim() != model_dim(m)) throw InvalidArgument("hessian_monitor: dimension mismatch");
  if (seeds < 1 || t_ladder.empty() || n_w_samples < 1)
    throw InvalidArgument("hessian_monitor: need seeds, samples and a T ladder");
  const std::size_t nt = t_ladder.size(), ns = static_cast<std::size_t>(seeds);
  auto vals = run_tasks<double>(nt * ns, o.jobs, [&](std::size_t task) {
    const double t = t_ladder[task / ns];
    const auto g = solve_from_origin(m, environment_seed(o, task % ns), {t * frame.v()}, o);
    const auto& path = g.solves[0].path;
    if (const auto* bl = as_bl(m)) return sup_hessian_norm_bl(bl->cost, frame, path, n_w_samples) / t;
    return sup_hessian_norm_riem(g.env.field, frame, PolyPath{path, {}}, n_w_samples, as_riem(m)->opts.quadrature) /
           t;
  });
  HessianReport rep;
  rep.t_ladder = t_ladder;
  for (std::size_t it = 0; it < nt; ++it) {
    std::vector<double> col;
    for (std::size_t s = 0; s < ns; ++s) {
      const double x = vals[it * ns + s];
      rep.rows.push_back({t_ladder[it], static_cast<int>(s), x});
      col.push_back(x);
    }
    rep.m_hat.push_back(summarize(col).mean);
  }
  rep.median = median(rep.m_hat);
  rep.max = *std::max_element(rep.m_hat.begin(), rep.m_hat.end());
  rep.pass = rep.max <= tol.hessian_factor * rep.median;
  return rep;
}

// ---- shear invariance --------------------------------------------------------------

double transformed_optimum(const Model& m, const Environment& env, const ShearMap& xi, double t) {
  const double target_hw = std::floor((env.half_width - 1e-6) / preimage_stretch(xi));
  const Environment pushed = push_environment(m, env, xi, target_hw);
  return solve(m, pushed, Vec::Zero(model_dim(m)), t * xi.w()).action;
}

InvarianceReport invariance_check(const Model& m, const Vec& v, const Vec& w, double t, int seeds,
                                  const SamplingOptions& o) {
  if (!(t > 0.0) || seeds < 1) throw InvalidArgument("invariance_check: need T > 0 and seeds");
  const ShearFrame frame(v, std::max(1.0, 2.0 * (w - v).norm() / v.norm()));
  const ShearMap xi(frame, w);
  const double stretch = preimage_stretch(xi);
  SamplingOptions fresh = o;
  fresh.base_seed = derive_seed(o.base_seed, 0x66726573ULL);
  auto rows = run_tasks<std::pair<double, double>>(static_cast<std::size_t>(seeds), o.jobs, [&](std::size_t s) {
    const double b = with_window(m, environment_seed(o, s), stretch * initial_half_width(m, t * w.norm()) + 1.0, o,
                                 [&](const Environment& env) { return transformed_optimum(m, env, xi, t); });
    const double a = solve_from_origin(m, environment_seed(fresh, s), {t * w}, o).solves[0].action;
    return std::make_pair(b / t, a / t);
  });
  std::vector<double> bs, as;
  for (const auto& [b, a] : rows) {
    bs.push_back(b);
    as.push_back(a);
  }
  InvarianceReport rep;
  rep.transformed = summarize(bs);
  rep.direct = summarize(as);
  rep.overlap = std::abs(rep.transformed.mean - rep.direct.mean) <=
                1.96 * (rep.transformed.stderr_ + rep.direct.stderr_);
  return rep;
}

// ---- serialization --------------------------------------------------------------------

nlohmann::json to_json(const Stat& s) { return {{"mean", s.mean}, {"stderr", s.stderr_}, {"n", s.n}}; }

nlohmann::json to_json(const ShapeEstimate& e) {
  nlohmann::json cells = nlohmann::json::array();
  for (int k = 0; k < e.grid.size(); ++k)
    for (std::size_t j = 0; j < e.t_ladder.size(); ++j) {
      const Stat s = e.cell(k, static_cast<int>(j));
      cells.push_back({{"direction", vec_json(e.grid.directions[static_cast<std::size_t>(k)])},
                       {"T", e.t_ladder[j]},
                       {"lambda_mean", s.mean},
                       {"lambda_stderr", s.stderr_},
                       {"n_seeds", s.n}});
    }
  return {{"model", e.model}, {"t_ladder", e.t_ladder}, {"cells", cells}};
}

nlohmann::json to_json(const ConvexityReport& r) {
  nlohmann::json tr = nlohmann::json::array();
  for (const auto& x : r.triples)
    tr.push_back({{"i", x.i},
                  {"j", x.j},
                  {"k", x.k},
                  {"a", x.a},
                  {"b", x.b},
                  {"defect", to_json(x.defect)},
                  {"violation", x.violation},
                  {"tolerance", x.tolerance},
                  {"pass", x.pass}});
  return {{"check", "convexity"}, {"T", r.t}, {"failures", r.failures}, {"pass", r.pass}, {"triples", tr}};
}

nlohmann::json to_json(const HomogeneityReport& r) {
  nlohmann::json en = nlohmann::json::array();
  for (const auto& x : r.entries)
    en.push_back({{"s", x.s},
                  {"exact_error", x.exact_error},
                  {"exact_pass", x.exact_pass},
                  {"lhs", to_json(x.lhs)},
                  {"rhs", to_json(x.rhs)},
                  {"difference", x.difference},
                  {"tolerance", x.tolerance},
                  {"pass", x.pass}});
  return {{"check", "homogeneity"}, {"pass", r.pass}, {"entries", en}};
}

nlohmann::json to_json(const DerivativeReport& r) {
  nlohmann::json en = nlohmann::json::array();
  for (const auto& x : r.entries)
    en.push_back({{"v", vec_json(x.v)},
                  {"h_index", x.j},
                  {"T", x.t},
                  {"formula", to_json(x.formula)},
                  {"finite_difference", to_json(x.fd)},
                  {"difference", x.difference},
                  {"combined_stderr", x.combined_stderr},
                  {"tolerance", x.tolerance},
                  {"pass", x.pass}});
  return {{"check", "derivative"}, {"epsilon", r.epsilon}, {"pass", r.pass}, {"entries", en}};
}

nlohmann::json to_json(const HessianReport& r) {
  return {{"check", "hessian_monitor"}, {"t_ladder", r.t_ladder}, {"m_hat", r.m_hat},
          {"median", r.median},         {"max", r.max},           {"pass", r.pass}};
}

nlohmann::json to_json(const SandwichReport& r) {
  return {{"check", "sandwich"},
          {"epsilon", r.epsilon},
          {"points", r.points},
          {"inner_misses", r.inner_misses},
          {"outer_misses", r.outer_misses},
          {"min_gauge_outside", std::isfinite(r.min_gauge_outside) ? nlohmann::json(r.min_gauge_outside)
                                                                   : nlohmann::json("inf")},
          {"max_gauge_inside", r.max_gauge_inside},
          {"pass", r.pass}};
}

nlohmann::json to_json(const InvarianceReport& r) {
  return {{"check", "shear_invariance"},
          {"transformed", to_json(r.transformed)},
          {"direct", to_json(r.direct)},
          {"overlap", r.overlap}};
}

}  // namespace fpp
