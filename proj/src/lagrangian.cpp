#include "fpp/lagrangian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fpp {

namespace {

// argmin over nu > 0 of q2/nu + q4/nu^3 + p nu.
double nu_star(double q2, double q4, double p) {
  if (q2 <= 0.0 && q4 <= 0.0) return 0.0;
  const double z = (q2 + std::sqrt(q2 * q2 + 12.0 * p * q4)) / (2.0 * p);
  return std::sqrt(z);
}

void check_dim(int d) {
  if (d < 2 || d > kMaxDim) throw InvalidArgument("lagrangian: dimension must be 2 or 3");
}

}  // namespace

LagrangianSpec LagrangianSpec::iso_quad(int d, double a) {
  check_dim(d);
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("iso_quad: a must be positive");
  LagrangianSpec l;
  l.family_ = LagrangianFamily::kIsoQuad;
  l.dim_ = d;
  l.a_ = a;
  l.m_ = a * Mat::Identity(d, d);
  l.lambda_min_ = l.lambda_max_ = a;
  return l;
}

LagrangianSpec LagrangianSpec::aniso_quad(Mat m) {
  const int d = static_cast<int>(m.rows());
  check_dim(d);
  if (m.cols() != d) throw InvalidArgument("aniso_quad: M must be square");
  if (!(m - m.transpose()).isZero(0.0)) throw InvalidArgument("aniso_quad: M must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  if (!(es.eigenvalues()(0) > 0.0)) throw InvalidArgument("aniso_quad: M must be positive definite");
  LagrangianSpec l;
  l.family_ = LagrangianFamily::kAnisoQuad;
  l.dim_ = d;
  l.m_ = std::move(m);
  l.lambda_min_ = es.eigenvalues()(0);
  l.lambda_max_ = es.eigenvalues()(d - 1);
  return l;
}

LagrangianSpec LagrangianSpec::quad_plus_quartic(int d, double a, double b) {
  LagrangianSpec l = iso_quad(d, a);
  if (!(b >= 0.0) || !std::isfinite(b)) throw InvalidArgument("quad_plus_quartic: b must be >= 0");
  l.family_ = LagrangianFamily::kQuadPlusQuartic;
  l.b_ = b;
  return l;
}

double LagrangianSpec::eval(const Vec& x) const {
  switch (family_) {
    case LagrangianFamily::kIsoQuad:
      return a_ * x.squaredNorm();
    case LagrangianFamily::kAnisoQuad:
      return x.dot(m_ * x);
    case LagrangianFamily::kQuadPlusQuartic: {
      const double s = x.squaredNorm();
      return a_ * s + b_ * s * s;
    }
  }
  return 0.0;
}

Vec LagrangianSpec::grad(const Vec& x) const {
  switch (family_) {
    case LagrangianFamily::kIsoQuad:
      return 2.0 * a_ * x;
    case LagrangianFamily::kAnisoQuad:
      return 2.0 * (m_ * x);
    case LagrangianFamily::kQuadPlusQuartic:
      return (2.0 * a_ + 4.0 * b_ * x.squaredNorm()) * x;
  }
  return x;
}

Mat LagrangianSpec::hess(const Vec& x) const {
  switch (family_) {
    case LagrangianFamily::kIsoQuad:
      return 2.0 * a_ * Mat::Identity(dim_, dim_);
    case LagrangianFamily::kAnisoQuad:
      return 2.0 * m_;
    case LagrangianFamily::kQuadPlusQuartic: {
      const double s = x.squaredNorm();
      return (2.0 * a_ + 4.0 * b_ * s) * Mat::Identity(dim_, dim_) + 8.0 * b_ * x * x.transpose();
    }
  }
  return Mat::Zero(dim_, dim_);
}

double LagrangianSpec::sup_on_ball(double radius) const {
  const double s = radius * radius;
  switch (family_) {
    case LagrangianFamily::kIsoQuad:
      return a_ * s;
    case LagrangianFamily::kAnisoQuad:
      return lambda_max_ * s;
    case LagrangianFamily::kQuadPlusQuartic:
      return a_ * s + b_ * s * s;
  }
  return 0.0;
}

double LagrangianSpec::radial_min(double s) const {
  const double s2 = s * s;
  switch (family_) {
    case LagrangianFamily::kIsoQuad:
      return a_ * s2;
    case LagrangianFamily::kAnisoQuad:
      return lambda_min_ * s2;
    case LagrangianFamily::kQuadPlusQuartic:
      return a_ * s2 + b_ * s2 * s2;
  }
  return 0.0;
}

double LagrangianSpec::continuous_step_count(const Vec& delta, double penalty_unit) const {
  switch (family_) {
    case LagrangianFamily::kIsoQuad:
    case LagrangianFamily::kAnisoQuad:
      return nu_star(eval(delta), 0.0, penalty_unit);
    case LagrangianFamily::kQuadPlusQuartic: {
      const double s = delta.squaredNorm();
      return nu_star(a_ * s, b_ * s * s, penalty_unit);
    }
  }
  return 1.0;
}

LagrangianSpec LagrangianSpec::scaled(double s) const {
  if (!(s > 0.0)) throw InvalidArgument("scale must be positive");
  switch (family_) {
    case LagrangianFamily::kIsoQuad:
      return iso_quad(dim_, a_ * s);
    case LagrangianFamily::kAnisoQuad:
      return aniso_quad(m_ * s);
    case LagrangianFamily::kQuadPlusQuartic:
      return quad_plus_quartic(dim_, a_ * s, b_ * s);
  }
  return *this;
}

std::string LagrangianSpec::family_name() const {
  switch (family_) {
    case LagrangianFamily::kIsoQuad:
      return "iso_quad";
    case LagrangianFamily::kAnisoQuad:
      return "aniso_quad";
    case LagrangianFamily::kQuadPlusQuartic:
      return "quad_plus_quartic";
  }
  return "unknown";
}

StepBound step_bound(const LagrangianSpec& l) {
  StepBound sb;
  sb.l_star_2 = l.sup_on_ball(2.0);
  const double target = sb.l_star_2 + 1.0;
  // radial_min(s)/s is increasing; find the first 1e-3 grid point reaching target.
  auto ok = [&](long k) {
    const double s = static_cast<double>(k) / 1000.0;
    return l.radial_min(s) / s >= target;
  };
  long hi = 2001;
  while (!ok(hi)) hi *= 2;
  long lo = 2000;  // treated as failing: r is clamped below at 2 + 1e-3
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  sb.r = static_cast<double>(hi) / 1000.0;
  return sb;
}

SegmentCost segment_cost(const LagrangianSpec& l, double r, const Vec& delta, double penalty_sum,
                         double penalty_unit) {
  const double dist = delta.norm();
  if (!(dist > 0.0)) throw InvalidArgument("segment_cost: zero displacement");
  const double n_min_real = std::max(1.0, std::ceil(dist / r));
  const long n_min = static_cast<long>(n_min_real);
  const double endpoint = 0.5 * penalty_unit * penalty_sum;
  auto cost = [&](long n) {
    const double nd = static_cast<double>(n);
    return nd * l.eval(delta / nd) + penalty_unit * (nd - 1.0) + endpoint;
  };
  const double nu = l.continuous_step_count(delta, penalty_unit);
  long n = std::max(n_min, static_cast<long>(std::floor(nu)));
  double c = cost(n);
  while (n > n_min) {
    const double down = cost(n - 1);
    if (!(down <= c)) break;
    --n;
    c = down;
  }
  for (;;) {
    const double up = cost(n + 1);
    if (!(up < c)) break;
    ++n;
    c = up;
  }
  return {c, n};
}

SegmentCost segment_cost_scan(const LagrangianSpec& l, double r, const Vec& delta,
                              double penalty_sum, long n_max, double penalty_unit) {
  const double dist = delta.norm();
  if (!(dist > 0.0)) throw InvalidArgument("segment_cost: zero displacement");
  const long n_min = static_cast<long>(std::max(1.0, std::ceil(dist / r)));
  SegmentCost best{std::numeric_limits<double>::infinity(), 0};
  for (long n = n_min; n <= n_max; ++n) {
    const double nd = static_cast<double>(n);
    const double c = nd * l.eval(delta / nd) + penalty_unit * (nd - 1.0) + 0.5 * penalty_unit * penalty_sum;
    if (c < best.cost) best = {c, n};
  }
  return best;
}

double segment_cost_lower_envelope(const LagrangianSpec& l, double r, double dist,
                                   double penalty_unit) {
  if (!(dist > 0.0)) return 0.0;
  const double nu_min = std::max(1.0, dist / r);
  double q2 = 0.0, q4 = 0.0;
  switch (l.family()) {
    case LagrangianFamily::kIsoQuad:
    case LagrangianFamily::kAnisoQuad:
      q2 = l.quadratic_floor() * dist * dist;
      break;
    case LagrangianFamily::kQuadPlusQuartic:
      q2 = l.a() * dist * dist;
      q4 = l.b() * dist * dist * dist * dist;
      break;
  }
  const double nu = std::max(nu_min, nu_star(q2, q4, penalty_unit));
  return nu * l.radial_min(dist / nu) + penalty_unit * (nu - 1.0);
}

double lower_envelope_inverse(const LagrangianSpec& l, double r, double budget,
                              double penalty_unit) {
  if (!(budget > 0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (segment_cost_lower_envelope(l, r, hi, penalty_unit) <= budget) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 80 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (segment_cost_lower_envelope(l, r, mid, penalty_unit) <= budget ? lo : hi) = mid;
  }
  return lo;
}

nlohmann::json to_json(const LagrangianSpec& l) {
  nlohmann::json j{{"family", l.family_name()}};
  switch (l.family()) {
    case LagrangianFamily::kIsoQuad:
      j["a"] = l.a();
      break;
    case LagrangianFamily::kQuadPlusQuartic:
      j["a"] = l.a();
      j["b"] = l.b();
      break;
    case LagrangianFamily::kAnisoQuad: {
      nlohmann::json m = nlohmann::json::array();
      for (int i = 0; i < l.dim(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < l.dim(); ++k) row.push_back(l.m()(i, k));
        m.push_back(row);
      }
      j["M"] = m;
      break;
    }
  }
  return j;
}

LagrangianSpec lagrangian_from_json(const nlohmann::json& j, int d) {
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "iso_quad") return LagrangianSpec::iso_quad(d, j.at("a").get<double>());
  if (fam == "quad_plus_quartic")
    return LagrangianSpec::quad_plus_quartic(d, j.at("a").get<double>(), j.at("b").get<double>());
  if (fam == "aniso_quad") {
    const auto& m = j.at("M");
    if (!m.is_array() || static_cast<int>(m.size()) != d) throw InvalidArgument("aniso_quad: M must be d x d");
    Mat mm(d, d);
    for (int i = 0; i < d; ++i) {
      if (!m[i].is_array() || static_cast<int>(m[i].size()) != d) throw InvalidArgument("aniso_quad: M must be d x d");
      for (int k = 0; k < d; ++k) mm(i, k) = m[i][k].get<double>();
    }
    return LagrangianSpec::aniso_quad(mm);
  }
  throw InvalidArgument("unknown lagrangian family: " + fam);
}

}  // namespace fpp
