#pragma once

#include "fpp/types.hpp"

#include <vector>

namespace fpp {

/// Direction v, an orthonormal basis of its orthogonal hyperplane H and the
/// radius delta of the admissible neighbourhood H(delta) = (v + H) ∩ B(v, delta).
class ShearFrame {
 public:
  ShearFrame() = default;
  explicit ShearFrame(Vec v, double delta = 1.0);

  const Vec& v() const { return v_; }
  double delta() const { return delta_; }
  int dim() const { return static_cast<int>(v_.size()); }
  /// Number of H coordinates, d - 1.
  int codim() const { return static_cast<int>(basis_.size()); }
  const Vec& h(int j) const { return basis_[static_cast<std::size_t>(j)]; }
  const std::vector<Vec>& basis() const { return basis_; }

  /// w = v + sum_j t_j h_j.
  Vec point(const Eigen::VectorXd& t) const;
  /// H coordinates of w - v; throws if w is not in v + H.
  Eigen::VectorXd coordinates(const Vec& w) const;
  /// <v, z> / |v|^2.
  double axial(const Vec& z) const { return v_.dot(z) / v_norm2_; }
  double v_norm2() const { return v_norm2_; }

 private:
  Vec v_;
  double v_norm2_ = 0.0;
  double delta_ = 1.0;
  std::vector<Vec> basis_;
};

/// x -> (<v,x>/|v|^2)(w - v) + x. Linear, unimodular, fixes H pointwise and
/// sends T v to T w.
class ShearMap {
 public:
  ShearMap() = default;
  /// w must lie in v + H (relative residual <= 1e-12).
  ShearMap(const ShearFrame& frame, const Vec& w);
  /// w = v + sum_j t_j h_j; exact membership in v + H by construction.
  static ShearMap from_coordinates(const ShearFrame& frame, const Eigen::VectorXd& t);

  const ShearFrame& frame() const { return frame_; }
  const Vec& w() const { return w_; }
  const Vec& offset() const { return offset_; }
  const Mat& matrix() const { return matrix_; }

  Vec apply(const Vec& x) const { return x + frame_.axial(x) * offset_; }
  std::vector<Vec> apply_path(const std::vector<Vec>& path) const;
  Vec inverse_apply(const Vec& x) const { return x - frame_.axial(x) * offset_; }

  /// H coordinates of w.
  const Eigen::VectorXd& coordinates() const { return coords_; }
  /// The map in the orthonormal frame (v/|v|, h_1, ...): unit lower triangular.
  Mat frame_matrix() const;
  /// Product of the frame matrix diagonal.
  double determinant() const;

 private:
  ShearFrame frame_;
  Vec w_;
  Vec offset_;  // w - v
  Eigen::VectorXd coords_;
  Mat matrix_;
};

}  // namespace fpp
