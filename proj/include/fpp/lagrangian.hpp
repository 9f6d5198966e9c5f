#pragma once

#include "fpp/types.hpp"

#include "json.hpp"

#include <string>

namespace fpp {

enum class LagrangianFamily { kIsoQuad, kAnisoQuad, kQuadPlusQuartic };

/// Convex, even, C^2 step cost with a strictly positive definite quadratic
/// part:
///   kIsoQuad          a |x|^2
///   kAnisoQuad        <M x, x>
///   kQuadPlusQuartic  a |x|^2 + b |x|^4
class LagrangianSpec {
 public:
  LagrangianSpec() = default;

  static LagrangianSpec iso_quad(int d, double a);
  static LagrangianSpec aniso_quad(Mat m);
  static LagrangianSpec quad_plus_quartic(int d, double a, double b);

  LagrangianFamily family() const { return family_; }
  int dim() const { return dim_; }
  double a() const { return a_; }
  double b() const { return b_; }
  const Mat& m() const { return m_; }

  double eval(const Vec& x) const;
  Vec grad(const Vec& x) const;
  Mat hess(const Vec& x) const;

  /// Smallest eigenvalue of the quadratic part: the constant c with
  /// L(x) >= c|x|^2 near 0.
  double quadratic_floor() const { return lambda_min_; }
  /// sup_{|x| <= radius} L(x).
  double sup_on_ball(double radius) const;
  /// min over unit u of L(s u), s >= 0.
  double radial_min(double s) const;
  /// Real minimiser over nu > 0 of nu L(delta / nu) + penalty_unit * nu.
  double continuous_step_count(const Vec& delta, double penalty_unit = 1.0) const;

  /// Multiply every cost by s > 0.
  LagrangianSpec scaled(double s) const;

  std::string family_name() const;

 private:
  LagrangianFamily family_ = LagrangianFamily::kIsoQuad;
  int dim_ = 2;
  double a_ = 1.0;
  double b_ = 0.0;
  Mat m_;
  double lambda_min_ = 1.0;
  double lambda_max_ = 1.0;
};

struct StepBound {
  double r = 0.0;       // no geodesic step exceeds r
  double l_star_2 = 0.0;  // sup of L over the closed ball of radius 2
};

/// Minimal r on a 1e-3 grid (at least 2 + 1e-3) with
/// inf_{|y| > r} L(y)/|y| >= L*_2 + 1.
StepBound step_bound(const LagrangianSpec& l);

struct SegmentCost {
  double cost = 0.0;
  long n_opt = 0;
};

/// Cheapest evenly spaced straight path over displacement `delta`:
///   min_{n >= max(1, ceil(|delta|/r))} n L(delta/n) + (n - 1) + (F(x) + F(y))/2.
/// Interior vertices are always charged the unit penalty. Ties go to the
/// smallest n. `penalty_sum` is F(x) + F(y).
SegmentCost segment_cost(const LagrangianSpec& l, double r, const Vec& delta, double penalty_sum,
                         double penalty_unit = 1.0);

/// Reference implementation: plain scan of n up to n_max.
SegmentCost segment_cost_scan(const LagrangianSpec& l, double r, const Vec& delta,
                              double penalty_sum, long n_max, double penalty_unit = 1.0);

/// Convex lower bound on segment_cost for any penalty pattern:
///   f(dist) = inf_{nu >= max(1, dist/r)} nu * radial_min(dist/nu) + (nu - 1).
double segment_cost_lower_envelope(const LagrangianSpec& l, double r, double dist,
                                   double penalty_unit = 1.0);

/// Inverse of the (nondecreasing) envelope: largest dist with f(dist) <= budget.
double lower_envelope_inverse(const LagrangianSpec& l, double r, double budget,
                              double penalty_unit = 1.0);

nlohmann::json to_json(const LagrangianSpec& l);
LagrangianSpec lagrangian_from_json(const nlohmann::json& j, int d);

}  // namespace fpp
