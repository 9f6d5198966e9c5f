#pragma once

#include "fpp/bl_geodesic.hpp"
#include "fpp/riemannian.hpp"
#include "fpp/shear.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace fpp {

// ---- models and environments -------------------------------------------------------

struct BrokenLineModel {
  BrokenLineCost cost;
  double intensity = 1.0;
  GeodesicOptions opts;
};

struct RiemannianModel {
  int dim = 2;
  MetricMode mode = MetricMode::kSum;
  double lambda = 1.0;
  MarkLaw law;
  double intensity = 1.0;
  RiemannianOptions opts;
};

using Model = std::variant<BrokenLineModel, RiemannianModel>;

int model_dim(const Model& m);
bool is_broken_line(const Model& m);
nlohmann::json to_json(const Model& m);

/// One realisation of the random environment on a window.
struct Environment {
  PointConfiguration points;  // broken-line model
  MetricField field;          // Riemannian model
  double half_width = 0.0;
};

/// Cell-consistent sample on the origin-centred cube of the given integer
/// half-width.
Environment sample_environment(const Model& m, std::uint64_t seed, double half_width);

/// Environment pushed through the shear onto the origin-centred cube of
/// half-width `target_half_width`, whose preimage must lie in env's window.
Environment push_environment(const Model& m, const Environment& env, const ShearMap& xi,
                             double target_half_width);

struct Solve {
  double action = 0.0;
  std::vector<Vec> path;  // geodesic vertices from x to y
};

Solve solve(const Model& m, const Environment& env, const Vec& x, const Vec& y);

/// Minimal action; 0 when x == y.
double min_action(const Model& m, const Environment& env, const Vec& x, const Vec& y);

struct SamplingOptions {
  std::uint64_t base_seed = 1;
  int jobs = 0;                // <= 0: every logical core
  int max_retries = 4;         // window growth attempts after a SolverError
  double window_growth = 1.5;
};

/// Environment seed of seed index s. Shared by every direction and T, so
/// all comparisons use common random numbers.
std::uint64_t environment_seed(const SamplingOptions& o, std::uint64_t s);

/// Starting window half-width for solves from the origin to distance `reach`.
double initial_half_width(const Model& m, double reach);

/// Solves 0 -> target for every target in one environment realisation.
/// On a SolverError the window grows and every target is re-solved, which
/// leaves the environment unchanged (cellwise sampling).
struct SolveGroup {
  Environment env;
  std::vector<Solve> solves;
  int retries = 0;
};
SolveGroup solve_from_origin(const Model& m, std::uint64_t env_seed, const std::vector<Vec>& targets,
                             const SamplingOptions& o);

// ---- direction grids and estimates -----------------------------------------------

/// Unit directions: equal angles from (1, 0) in 2D, a Fibonacci sphere in 3D.
/// With `antipodal` the grid is closed under u -> -u (m must be even).
struct DirectionGrid {
  int d = 2;
  std::vector<Vec> directions;
  bool antipodal = false;

  static DirectionGrid make(int d, int m, bool antipodal = false);
  int size() const { return static_cast<int>(directions.size()); }
};

struct Stat {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
};

/// Mean and standard error of the mean (0 for a single value).
Stat summarize(const std::vector<double>& xs);

struct LambdaEstimate {
  Stat stat;
  std::vector<double> values;  // A(0, T v) / T per seed index
};

LambdaEstimate estimate_lambda(const Model& m, const Vec& v, double t, int seeds,
                               const SamplingOptions& o);

struct ShapeEstimate {
  nlohmann::json model;
  DirectionGrid grid;
  std::vector<double> t_ladder;
  // values[k][j][s]: direction k, ladder entry j, seed index s.
  std::vector<std::vector<std::vector<double>>> values;

  Stat cell(int k, int j) const;
  int t_index(double t) const;  // throws when t is not on the ladder
};

ShapeEstimate shape_scan(const Model& m, const DirectionGrid& grid, const std::vector<double>& t_ladder,
                         int seeds, const SamplingOptions& o);

// ---- limit shapes ---------------------------------------------------------------

/// Closed star-shaped polyline around the origin.
struct LimitShape {
  std::vector<Vec> boundary;
  std::string source;  // "lambda" or "empirical_ball"
  double t = 0.0;

  /// Gauge of the polygon: |z| / (radius of the boundary along z), 2D only.
  double gauge(const Vec& z) const;
};

LimitShape limit_shape_from_lambda(const ShapeEstimate& e, double t);

/// (1/T) E_omega(T) on a grid, broken-line model in 2D. Grid points are
/// solved exactly as extra vertices of the search graph; the search ball
/// grows until its exit bound exceeds T, so every point outside it has
/// action above T.
struct EmpiricalBall {
  double t = 0.0;
  double grid_step = 1.0;
  double search_radius = 0.0;
  std::vector<Vec> points;     // grid points, unscaled
  std::vector<double> action;  // A(0, z), +inf above T
  LimitShape shape;            // ray boundary, scaled by 1/T

  bool inside(std::size_t i) const { return action[i] <= t; }
};

EmpiricalBall empirical_ball(const Model& m, const Environment& env, double t, double grid_step,
                             const DirectionGrid& rays);
EmpiricalBall empirical_ball(const Model& m, std::uint64_t env_seed, double t, double grid_step,
                             const DirectionGrid& rays, const SamplingOptions& o);

struct SandwichReport {
  double epsilon = 0.0;
  std::size_t points = 0;
  std::size_t inner_misses = 0;  // in (1 - eps) E but not in the empirical ball
  std::size_t outer_misses = 0;  // in the empirical ball but not in (1 + eps) E
  double min_gauge_outside = 0.0;
  double max_gauge_inside = 0.0;
  bool pass = false;
};

SandwichReport sandwich_check(const EmpiricalBall& ball, const LimitShape& shape, double epsilon);

// ---- checks -----------------------------------------------------------------------

/// Pass thresholds shared by the statistical checks.
struct Tolerances {
  double convexity_sigma = 3.0;       // stderr multiples for convexity
  double homogeneity_sigma = 2.0;
  double homogeneity_exact = 1e-12;
  double derivative_sigma = 2.0;
  double derivative_relative = 0.05;
  double derivative_absolute = 0.0;
  double hessian_factor = 2.0;        // max M(T) <= factor * median
  double bias_slack = 1.0;            // multiplies the 1/T slack
};

struct ConvexityTriple {
  int i = 0, j = 0, k = 0;   // u_j = a u_i + b u_k with a, b > 0
  double a = 0.0, b = 0.0;
  Stat defect;               // per-seed Lambda(u_j) - a Lambda(u_i) - b Lambda(u_k)
  double violation = 0.0;    // max(0, mean defect)
  double tolerance = 0.0;
  bool pass = false;
};

struct ConvexityReport {
  double t = 0.0;
  std::vector<ConvexityTriple> triples;
  int failures = 0;
  bool pass = false;
};

/// Convexity of the 2D estimate through its homogeneous form over grid
/// triples whose outer directions are at most a quarter turn apart.
/// Default tolerance: 3 stderr of the paired defect + 1/T.
ConvexityReport convexity_check(const ShapeEstimate& e, double t, const Tolerances& tol = {});

struct HomogeneityEntry {
  double s = 1.0;
  double exact_error = 0.0;  // max over seeds |A(0,T(sv))/T - s A(0,(sT)v)/(sT)|
  Stat lhs;                  // A(0, T s v) / T
  Stat rhs;                  // s A(0, T v) / T
  double difference = 0.0;
  double tolerance = 0.0;
  bool exact_pass = false;
  bool pass = false;
};

struct HomogeneityReport {
  std::vector<HomogeneityEntry> entries;
  bool pass = false;
};

/// Exact identity to 1e-12 and the statistical form within
/// 2 stderr + max(1, s)/T.
HomogeneityReport homogeneity_check(const Model& m, const Vec& v, const std::vector<double>& s_list,
                                    double t, int seeds, const SamplingOptions& o,
                                    const Tolerances& tol = {});

struct DerivativeEntry {
  Vec v;
  int j = 0;
  double t = 0.0;
  Stat formula;     // <grad_H B(v, v, geodesic), h_j> / T
  Stat fd;          // [A(0, T(v + eps h)) - A(0, T(v - eps h))] / (2 eps T)
  double difference = 0.0;
  double combined_stderr = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct DerivativeReport {
  double epsilon = 0.0;
  std::vector<DerivativeEntry> entries;
  bool pass = false;
};

/// Default pass rule per entry: |formula - fd| <= 2 combined stderr + 0.05 |fd|.
DerivativeReport derivative_check(const Model& m, const ShearFrame& frame, const std::vector<double>& t_ladder,
                                  int seeds, double epsilon, const SamplingOptions& o,
                                  const Tolerances& tol = {});

struct HessianRow {
  double t = 0.0;
  int seed = 0;
  double value = 0.0;  // sup_w || hess_H B || / T
};

struct HessianReport {
  std::vector<HessianRow> rows;
  std::vector<double> t_ladder;
  std::vector<double> m_hat;  // mean over seeds per T
  double median = 0.0;
  double max = 0.0;
  bool pass = false;          // max <= factor * median
};

HessianReport hessian_monitor(const Model& m, const ShearFrame& frame, const std::vector<double>& t_ladder,
                              int n_w_samples, int seeds, const SamplingOptions& o,
                              const Tolerances& tol = {});

// ---- shear invariance --------------------------------------------------------------

/// Optimal transformed action: the minimal action from 0 to T w in the
/// environment pushed through the shear taking v to w.
double transformed_optimum(const Model& m, const Environment& env, const ShearMap& xi, double t);

struct InvarianceReport {
  Stat transformed;  // B^T(w, v) / T
  Stat direct;       // A(0, T w) / T on independent environments
  bool overlap = false;
};

/// 95% intervals of E[B^T(w,v)] and E[A(0,Tw)] overlap.
InvarianceReport invariance_check(const Model& m, const Vec& v, const Vec& w, double t, int seeds,
                                  const SamplingOptions& o);

// ---- serialization --------------------------------------------------------------------

nlohmann::json to_json(const Stat& s);
nlohmann::json to_json(const ShapeEstimate& e);
nlohmann::json to_json(const ConvexityReport& r);
nlohmann::json to_json(const HomogeneityReport& r);
nlohmann::json to_json(const DerivativeReport& r);
nlohmann::json to_json(const HessianReport& r);
nlohmann::json to_json(const SandwichReport& r);
nlohmann::json to_json(const InvarianceReport& r);

}  // namespace fpp
