#include "fpp/shear_map.hpp"

#include <algorithm>
#include <cmath>

namespace fpp {

ShearFrame::ShearFrame(Vec v, double delta) : v_(std::move(v)), delta_(delta) {
  const int d = static_cast<int>(v_.size());
  if (d < 2 || d > kMaxDim) throw InvalidArgument("ShearFrame: dimension must be 2 or 3");
  v_norm2_ = v_.squaredNorm();
  if (!(v_norm2_ > 0.0) || !std::isfinite(v_norm2_))
    throw InvalidArgument("ShearFrame: v must be nonzero and finite");
  if (!(delta_ > 0.0)) throw InvalidArgument("ShearFrame: delta must be positive");

  const Vec u = v_ / std::sqrt(v_norm2_);
  if (d == 2) {
    basis_.push_back(make_vec({-u(1), u(0)}));
    return;
  }
  // Gram-Schmidt over the coordinate axes, least aligned with v first.
  int order[3] = {0, 1, 2};
  std::sort(order, order + 3, [&](int a, int b) {
    const double fa = std::abs(u(a)), fb = std::abs(u(b));
    return fa < fb || (fa == fb && a < b);
  });
  for (int k = 0; k < 3 && basis_.size() < 2; ++k) {
    Vec e = Vec::Zero(3);
    e(order[k]) = 1.0;
    e -= e.dot(u) * u;
    for (const Vec& b : basis_) e -= e.dot(b) * b;
    const double n = e.norm();
    if (n > 1e-8) basis_.push_back(e / n);
  }
}

Vec ShearFrame::point(const Eigen::VectorXd& t) const {
  Vec w = v_;
  for (int j = 0; j < codim(); ++j) w += t(j) * basis_[static_cast<std::size_t>(j)];
  return w;
}

Eigen::VectorXd ShearFrame::coordinates(const Vec& w) const {
  if (w.size() != v_.size()) throw InvalidArgument("ShearFrame: dimension mismatch");
  const Vec off = w - v_;
  const double residual = std::abs(v_.dot(off)) / std::sqrt(v_norm2_);
  const double scale = std::max(1.0, off.norm());
  if (residual > 1e-12 * scale) throw InvalidArgument("shear target w is not in v + H");
  Eigen::VectorXd t(codim());
  for (int j = 0; j < codim(); ++j) t(j) = off.dot(basis_[static_cast<std::size_t>(j)]);
  return t;
}

ShearMap::ShearMap(const ShearFrame& frame, const Vec& w) : frame_(frame), w_(w) {
  coords_ = frame_.coordinates(w);  // also the membership check
  offset_ = w_ - frame_.v();
  matrix_ = Mat::Identity(frame_.dim(), frame_.dim()) + offset_ * frame_.v().transpose() / frame_.v_norm2();
}

ShearMap ShearMap::from_coordinates(const ShearFrame& frame, const Eigen::VectorXd& t) {
  ShearMap m;
  m.frame_ = frame;
  m.coords_ = t;
  m.offset_ = Vec::Zero(frame.dim());
  for (int j = 0; j < frame.codim(); ++j) m.offset_ += t(j) * frame.h(j);
  m.w_ = frame.v() + m.offset_;
  m.matrix_ = Mat::Identity(frame.dim(), frame.dim()) + m.offset_ * frame.v().transpose() / frame.v_norm2();
  return m;
}

Mat ShearMap::frame_matrix() const {
  const int d = frame_.dim();
  Mat r = Mat::Identity(d, d);
  const double vn = std::sqrt(frame_.v_norm2());
  for (int j = 0; j < frame_.codim(); ++j) r(j + 1, 0) = coords_(j) / vn;
  return r;
}

double ShearMap::determinant() const {
  const Mat r = frame_matrix();
  double det = 1.0;
  for (int k = 0; k < r.rows(); ++k) det *= r(k, k);
  return det;
}

std::vector<Vec> ShearMap::apply_path(const std::vector<Vec>& path) const {
  std::vector<Vec> out;
  out.reserve(path.size());
  for (const Vec& p : path) out.push_back(apply(p));
  return out;
}

}  // namespace fpp
