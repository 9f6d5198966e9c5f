#pragma once

#include "fpp/env.hpp"
#include "fpp/shear_map.hpp"

#include "json.hpp"

#include <array>
#include <string>
#include <vector>

namespace fpp {

// ---- bump profile -------------------------------------------------------------

/// psi(s) = exp(1 - 1/(1 - s)) on [0, 1), 0 beyond; psi(0) = 1.
double bump(double s);
double bump_d1(double s);
double bump_d2(double s);

/// phi(z) = psi(|z|^2 / rho^2) M and its directional derivatives.
Mat kernel_value(const KernelSpec& k, const Vec& z);
Mat kernel_dir(const KernelSpec& k, const Vec& z, const Vec& e);
Mat kernel_dir2(const KernelSpec& k, const Vec& z, const Vec& e, const Vec& f);

// ---- matrix exponential calculus ----------------------------------------------

/// Divided difference exp[x_0, ..., x_k] (k <= 2 used), stable for close nodes.
double exp_divided_difference(std::vector<double> x);

/// exp(S) for symmetric S and its first and second Frechet derivatives.
class SymmetricExp {
 public:
  explicit SymmetricExp(const Mat& s);
  const Mat& value() const { return value_; }
  Mat d1(const Mat& e) const;
  Mat d2(const Mat& e, const Mat& f) const;

 private:
  Mat q_;
  Vec lambda_;
  Mat value_;
};

// ---- metric fields ---------------------------------------------------------------

enum class MetricMode { kSum, kProduct };

/// g_x = sum_i phi_i(x - x_i) + base  (kSum, base = lambda I by default)
/// g_x = exp(sum_i phi_i(x - x_i))    (kProduct)
class MetricField {
 public:
  MetricField() = default;
  MetricField(MarkedConfiguration marks, MetricMode mode, double lambda);
  /// Constant field g = m (kSum mode with no kernels).
  static MetricField constant(const Mat& m);

  int dim() const { return marks_.config.dim(); }
  MetricMode mode() const { return mode_; }
  double lambda() const { return lambda_; }
  const Mat& base() const { return base_; }
  const MarkedConfiguration& marks() const { return marks_; }
  double max_kernel_radius() const { return max_radius_; }
  /// True when every kernel that can affect g at x has been sampled.
  bool in_core(const Vec& x) const;

  Mat metric_at(const Vec& x) const;
  /// Partial derivatives d g / d x_k, k = 0..d-1.
  std::vector<Mat> metric_grad_at(const Vec& x) const;
  /// metric_at and metric_grad_at from one kernel pass.
  Mat metric_and_grad_at(const Vec& x, std::vector<Mat>& grad) const;

  /// Metric of the sheared environment at the sheared point:
  ///   G(sum_i phi_i(Xi (x - x_i))), Xi the shear (identity when null).
  /// With derivatives along the H coordinates t_j of w when requested.
  struct Pulled {
    Mat g;
    std::vector<Mat> dg;               // d g / d t_j
    std::vector<std::vector<Mat>> d2g; // d^2 g / d t_j d t_k
  };
  Pulled pulled(const Vec& x, const ShearMap* xi, int order) const;
  /// d g^{w,v}_x / d w along an arbitrary direction e at w = v (full-space
  /// derivative in w; e need not lie in H).
  Mat pulled_dir_at_identity(const Vec& x, const ShearFrame& frame, const Vec& e) const;

 private:
  template <class Fn>
  void for_each_kernel(const Vec& x, double reach, Fn&& fn) const;
  Mat finish(const Mat& s) const;

  MarkedConfiguration marks_;
  MetricMode mode_ = MetricMode::kSum;
  double lambda_ = 1.0;
  Mat base_;
  double max_radius_ = 0.0;
};

// ---- paths ------------------------------------------------------------------------

/// Piecewise-linear path; segment i takes durations[i] time units (1 when
/// durations is empty).
struct PolyPath {
  std::vector<Vec> vertices;
  std::vector<double> durations;

  double duration(std::size_t i) const { return durations.empty() ? 1.0 : durations[i]; }
  double total_time() const;
};

void validate(const PolyPath& p);

struct QuadratureRule {
  int subintervals = 8;  // composite Simpson, even
};

/// integral over [0, 1] of sqrt(<g(a + s (b - a)) (b - a), b - a>) ds.
double segment_length(const MetricField& field, const Vec& a, const Vec& b, QuadratureRule q = {});
double path_length(const MetricField& field, const PolyPath& path, QuadratureRule q = {});
/// Length and gradient with respect to every vertex.
double path_length_grad(const MetricField& field, const std::vector<Vec>& vertices,
                        std::vector<Vec>& grad, QuadratureRule q = {});

struct RiemannianOptions {
  int grid_divisions = 64;        // h = |x - y| / grid_divisions
  double corridor_margin = -1.0;  // < 0: |x - y| / 32
  int max_iterations = 500;
  double gradient_tol = 1e-8;
  QuadratureRule quadrature;
};

struct RiemannianGeodesic {
  PolyPath path;
  double length = 0.0;
  double lattice_length = 0.0;  // phase (i)
  double chord_length = 0.0;
  double kappa = 0.0;
  std::size_t lattice_nodes = 0;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;  // gradient tolerance reached (else iteration cap)
  bool chord_returned = false;
  int starts = 1;  // lattice paths screened by refinement
};

RiemannianGeodesic riemannian_geodesic(const MetricField& field, const Vec& x, const Vec& y,
                                       const RiemannianOptions& opts = {});

/// Minimal length; 0 when x == y.
double riemannian_distance(const MetricField& field, const Vec& x, const Vec& y,
                           const RiemannianOptions& opts = {});

/// Phase (i) only, for convergence studies.
RiemannianGeodesic lattice_geodesic(const MetricField& field, const Vec& x, const Vec& y,
                                    const RiemannianOptions& opts = {});

/// Same geometric path with vertices added at every integer arc length and
/// each segment's duration set to its Riemannian length, so the speed is 1
/// everywhere and integer times fall on vertices.
PolyPath unit_speed_reparametrize(const MetricField& field, const PolyPath& path,
                                  QuadratureRule q = {});

// ---- serialization --------------------------------------------------------------

std::string mode_name(MetricMode m);
MetricMode mode_from_name(const std::string& s);
nlohmann::json to_json(const MetricField& f);
nlohmann::json to_json(const RiemannianGeodesic& g);

}  // namespace fpp
