#pragma once

#include "fpp/bl_geodesic.hpp"
#include "fpp/riemannian.hpp"
#include "fpp/shear_map.hpp"

#include <cstdint>
#include <vector>

namespace fpp {

// ---- broken-line model ----------------------------------------------------------

/// B(w, v, path): steps pushed through the shear, penalties of the original
/// path kept. Equals path_action exactly when w = v.
double transformed_action_bl(const PointConfiguration& env, const BrokenLineCost& cost,
                             const ShearMap& xi, const std::vector<Vec>& path);

/// Derivatives in the H coordinates t_j of w = v + sum t_j h_j.
Eigen::VectorXd grad_B_bl(const BrokenLineCost& cost, const ShearMap& xi, const std::vector<Vec>& path);
Eigen::MatrixXd hess_B_bl(const BrokenLineCost& cost, const ShearMap& xi, const std::vector<Vec>& path);

// ---- Riemannian model ---------------------------------------------------------------

/// B(w, v, path): the sheared velocity measured in the sheared environment's
/// metric at the sheared point. Equals path_length exactly when w = v.
double transformed_action_riem(const MetricField& field, const ShearMap& xi, const PolyPath& path,
                               QuadratureRule q = {});
Eigen::VectorXd grad_B_riem(const MetricField& field, const ShearMap& xi, const PolyPath& path,
                            QuadratureRule q = {});
Eigen::MatrixXd hess_B_riem(const MetricField& field, const ShearMap& xi, const PolyPath& path,
                            QuadratureRule q = {});

/// Directional derivative at w = v along e from the unit-speed integrand
///   (1/2) D_e g(gdot, gdot) + (<v, gdot>/|v|^2) g(e, gdot);
/// `path` must be unit speed (see unit_speed_reparametrize). Not divided by T.
double riem_derivative_formula(const MetricField& field, const ShearFrame& frame, const PolyPath& path,
                               const Vec& e, QuadratureRule q = {});

// ---- Hessian monitor ---------------------------------------------------------------

/// Deterministic low-discrepancy points of H(delta) as H coordinates:
/// van der Corput on (-delta, delta) for d = 2, a Halton(2,3) disk for d = 3.
std::vector<Eigen::VectorXd> h_delta_samples(const ShearFrame& frame, int n);

/// Spectral norm of a symmetric matrix.
double spectral_norm(const Eigen::MatrixXd& m);

/// sup over the samples of || hess_H B(w, v, path) ||.
double sup_hessian_norm_bl(const BrokenLineCost& cost, const ShearFrame& frame,
                           const std::vector<Vec>& path, int n_samples);
double sup_hessian_norm_riem(const MetricField& field, const ShearFrame& frame, const PolyPath& path,
                             int n_samples, QuadratureRule q = {});

// ---- distributional invariance ---------------------------------------------------------

/// Two-sample chi-square test of the per-cell count law: Poisson samples on
/// [-10, 10]^2 pushed through the shear v -> w onto [-4, 4]^2, against fresh
/// samples on [-4, 4]^2. Counts in the 16 cells of side 2 are binned as
/// 0..9 and >= 10.
struct ChiSquareReport {
  std::vector<std::uint64_t> sheared;
  std::vector<std::uint64_t> fresh;
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
  double alpha = 0.0;
  bool pass = false;
};

ChiSquareReport shear_invariance_chi2(const Vec& v, const Vec& w, int seeds, std::uint64_t base_seed,
                                      double alpha = 1e-3);

/// Two-sample homogeneity statistic over the bins with a positive total.
ChiSquareReport chi2_two_sample(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                                double alpha);

}  // namespace fpp
