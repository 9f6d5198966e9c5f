#include "fpp/shear.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>

namespace fpp {

namespace {

void check_path(const std::vector<Vec>& path, int d) {
  if (path.size() < 2) throw InvalidArgument("transformed action: path needs at least 2 vertices");
  for (const Vec& p : path)
    if (p.size() != d) throw InvalidArgument("transformed action: dimension mismatch");
}

double simpson_weight(int k, int n) {
  if (k == 0 || k == n) return 1.0 / (3.0 * n);
  return (k % 2 == 1 ? 4.0 : 2.0) / (3.0 * n);
}

double radical_inverse(unsigned i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

}  // namespace

double transformed_action_bl(const PointConfiguration& env, const BrokenLineCost& cost,
                             const ShearMap& xi, const std::vector<Vec>& path) {
  check_path(path, xi.frame().dim());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) s += cost.lagrangian.eval(xi.apply(path[i + 1] - path[i]));
  double pen = 0.5 * (env.contains_point(path.front()) ? 0.0 : 1.0) +
               0.5 * (env.contains_point(path.back()) ? 0.0 : 1.0);
  for (std::size_t i = 1; i + 1 < path.size(); ++i) pen += env.contains_point(path[i]) ? 0.0 : 1.0;
  return s + cost.penalty * pen;
}

Eigen::VectorXd grad_B_bl(const BrokenLineCost& cost, const ShearMap& xi, const std::vector<Vec>& path) {
  const ShearFrame& fr = xi.frame();
  check_path(path, fr.dim());
  Eigen::VectorXd g = Eigen::VectorXd::Zero(fr.codim());
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec delta = path[i + 1] - path[i];
    const Vec gl = cost.lagrangian.grad(xi.apply(delta));
    const double a = fr.axial(delta);
    for (int j = 0; j < fr.codim(); ++j) g(j) += a * gl.dot(fr.h(j));
  }
  return g;
}

Eigen::MatrixXd hess_B_bl(const BrokenLineCost& cost, const ShearMap& xi, const std::vector<Vec>& path) {
  const ShearFrame& fr = xi.frame();
  check_path(path, fr.dim());
  const int m = fr.codim();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec delta = path[i + 1] - path[i];
    const Mat hl = cost.lagrangian.hess(xi.apply(delta));
    const double a = fr.axial(delta);
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) h(j, k) += a * a * fr.h(j).dot(hl * fr.h(k));
  }
  return h;
}

double transformed_action_riem(const MetricField& field, const ShearMap& xi, const PolyPath& path,
                               QuadratureRule q) {
  validate(path);
  const int n = q.subintervals;
  if (n < 2 || n % 2 != 0) throw InvalidArgument("quadrature: subintervals must be even and >= 2");
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
    const Vec& a = path.vertices[i];
    const Vec delta = path.vertices[i + 1] - a;
    const Vec p = xi.apply(delta);
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double s = static_cast<double>(k) / n;
      const Mat g = field.pulled(a + s * delta, &xi, 0).g;
      sum += simpson_weight(k, n) * std::sqrt(std::max(0.0, p.dot(g * p)));
    }
    len += sum;
  }
  return len;
}

namespace {

// Shared first/second derivative assembly for the Riemannian B.
void riem_derivatives(const MetricField& field, const ShearMap& xi, const PolyPath& path, QuadratureRule q,
                      int order, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
  validate(path);
  const ShearFrame& fr = xi.frame();
  const int m = fr.codim();
  const int n = q.subintervals;
  if (n < 2 || n % 2 != 0) throw InvalidArgument("quadrature: subintervals must be even and >= 2");
  grad = Eigen::VectorXd::Zero(m);
  hess = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
    const Vec& a = path.vertices[i];
    const Vec delta = path.vertices[i + 1] - a;
    const Vec p = xi.apply(delta);
    const double ad = fr.axial(delta);
    for (int k = 0; k <= n; ++k) {
      const double s = static_cast<double>(k) / n;
      const auto pl = field.pulled(a + s * delta, &xi, order);
      const Vec gp = pl.g * p;
      const double qv = p.dot(gp);
      if (!(qv > 0.0)) continue;
      const double root = std::sqrt(qv);
      const double w = simpson_weight(k, n);
      Eigen::VectorXd dq(m);
      for (int j = 0; j < m; ++j) {
        const Vec dp = ad * fr.h(j);
        dq(j) = 2.0 * dp.dot(gp) + p.dot(pl.dg[static_cast<std::size_t>(j)] * p);
      }
      grad += w * dq / (2.0 * root);
      if (order < 2) continue;
      for (int j = 0; j < m; ++j)
        for (int l = 0; l < m; ++l) {
          const Vec dpj = ad * fr.h(j), dpl = ad * fr.h(l);
          const double d2q = 2.0 * dpj.dot(pl.g * dpl) + 2.0 * dpj.dot(pl.dg[static_cast<std::size_t>(l)] * p) +
                             2.0 * dpl.dot(pl.dg[static_cast<std::size_t>(j)] * p) +
                             p.dot(pl.d2g[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)] * p);
          hess(j, l) += w * (d2q / (2.0 * root) - dq(j) * dq(l) / (4.0 * qv * root));
        }
    }
  }
}

}  // namespace

Eigen::VectorXd grad_B_riem(const MetricField& field, const ShearMap& xi, const PolyPath& path,
                            QuadratureRule q) {
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  riem_derivatives(field, xi, path, q, 1, g, h);
  return g;
}

Eigen::MatrixXd hess_B_riem(const MetricField& field, const ShearMap& xi, const PolyPath& path,
                            QuadratureRule q) {
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  riem_derivatives(field, xi, path, q, 2, g, h);
  return h;
}

double riem_derivative_formula(const MetricField& field, const ShearFrame& frame, const PolyPath& path,
                               const Vec& e, QuadratureRule q) {
  validate(path);
  const int n = q.subintervals;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
    const Vec& a = path.vertices[i];
    const Vec delta = path.vertices[i + 1] - a;
    const double tau = path.duration(i);
    const Vec vel = delta / tau;
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) {
      const Vec x = a + (static_cast<double>(k) / n) * delta;
      const Mat dg = field.pulled_dir_at_identity(x, frame, e);
      const Mat g = field.metric_at(x);
      sum += simpson_weight(k, n) * (0.5 * vel.dot(dg * vel) + frame.axial(vel) * e.dot(g * vel));
    }
    total += tau * sum;
  }
  return total;
}

std::vector<Eigen::VectorXd> h_delta_samples(const ShearFrame& frame, int n) {
  std::vector<Eigen::VectorXd> out;
  const double delta = frame.delta();
  for (int i = 1; i <= n; ++i) {
    Eigen::VectorXd t(frame.codim());
    if (frame.codim() == 1) {
      t(0) = delta * (2.0 * radical_inverse(static_cast<unsigned>(i), 2) - 1.0);
    } else {
      const double r = delta * std::sqrt(radical_inverse(static_cast<unsigned>(i), 2));
      const double th = 2.0 * std::numbers::pi * radical_inverse(static_cast<unsigned>(i), 3);
      t(0) = r * std::cos(th);
      t(1) = r * std::sin(th);
    }
    out.push_back(t);
  }
  return out;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double sup_hessian_norm_bl(const BrokenLineCost& cost, const ShearFrame& frame,
                           const std::vector<Vec>& path, int n_samples) {
  double best = 0.0;
  for (const auto& t : h_delta_samples(frame, n_samples))
    best = std::max(best, spectral_norm(hess_B_bl(cost, ShearMap::from_coordinates(frame, t), path)));
  return best;
}

double sup_hessian_norm_riem(const MetricField& field, const ShearFrame& frame, const PolyPath& path,
                             int n_samples, QuadratureRule q) {
  double best = 0.0;
  for (const auto& t : h_delta_samples(frame, n_samples))
    best = std::max(best, spectral_norm(hess_B_riem(field, ShearMap::from_coordinates(frame, t), path, q)));
  return best;
}

ChiSquareReport chi2_two_sample(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                                double alpha) {
  if (a.size() != b.size()) throw InvalidArgument("chi-square: histogram sizes differ");
  ChiSquareReport r;
  r.sheared = a;
  r.fresh = b;
  r.alpha = alpha;
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]);
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw InvalidArgument("chi-square: empty histogram");
  int used = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double tot = static_cast<double>(a[i] + b[i]);
    if (tot == 0.0) continue;
    ++used;
    const double ea = na * tot / (na + nb), eb = nb * tot / (na + nb);
    const double da = static_cast<double>(a[i]) - ea, db = static_cast<double>(b[i]) - eb;
    r.statistic += da * da / ea + db * db / eb;
  }
  r.dof = used - 1;
  r.p_value = r.dof > 0 ? boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic) : 1.0;
  r.pass = r.p_value > alpha;
  return r;
}

ChiSquareReport shear_invariance_chi2(const Vec& v, const Vec& w, int seeds, std::uint64_t base_seed,
                                      double alpha) {
  if (v.size() != 2 || w.size() != 2) throw InvalidArgument("shear_invariance_chi2: 2D only");
  if (seeds < 1) throw InvalidArgument("shear_invariance_chi2: need at least one seed");
  const ShearFrame frame(v, std::max(1.0, 2.0 * (w - v).norm() / v.norm()));
  const ShearMap xi(frame, w);
  const Window source = Window::cube(2, -10, 10), target = Window::cube(2, -4, 4);
  constexpr std::size_t kBins = 11;
  std::vector<std::uint64_t> hs(kBins, 0), hf(kBins, 0);
  auto tally = [&](const PointConfiguration& c, std::vector<std::uint64_t>& h) {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const Vec lo = make_vec({-4.0 + 2 * i, -4.0 + 2 * j});
        const Vec hi = make_vec({-2.0 + 2 * i, -2.0 + 2 * j});
        ++h[std::min<std::size_t>(count_in(c, lo, hi), kBins - 1)];
      }
  };
  for (int s = 0; s < seeds; ++s) {
    const auto us = static_cast<std::uint64_t>(s);
    tally(shear_pushforward(sample_points(source, derive_seed(base_seed, 2 * us)), xi, target), hs);
    tally(sample_points(target, derive_seed(base_seed, 2 * us + 1)), hf);
  }
  return chi2_two_sample(hs, hf, alpha);
}

}  // namespace fpp
