#include "fpp/riemannian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>

namespace fpp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

double bump(double s) {
  if (!(s < 1.0)) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s));
}

double bump_d1(double s) {
  if (!(s < 1.0)) return 0.0;
  const double u = 1.0 / (1.0 - s);
  return -bump(s) * u * u;
}

double bump_d2(double s) {
  if (!(s < 1.0)) return 0.0;
  const double u = 1.0 / (1.0 - s);
  return bump(s) * (u * u * u * u - 2.0 * u * u * u);
}

Mat kernel_value(const KernelSpec& k, const Vec& z) {
  return bump(z.squaredNorm() / (k.radius * k.radius)) * k.amplitude;
}

Mat kernel_dir(const KernelSpec& k, const Vec& z, const Vec& e) {
  const double r2 = k.radius * k.radius;
  return bump_d1(z.squaredNorm() / r2) * (2.0 * z.dot(e) / r2) * k.amplitude;
}

Mat kernel_dir2(const KernelSpec& k, const Vec& z, const Vec& e, const Vec& f) {
  const double r2 = k.radius * k.radius;
  const double q = z.squaredNorm() / r2;
  const double c = bump_d2(q) * 4.0 * z.dot(e) * z.dot(f) / (r2 * r2) + bump_d1(q) * 2.0 * e.dot(f) / r2;
  return c * k.amplitude;
}

double exp_divided_difference(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t k = x.size() - 1;
  if (k == 0) return std::exp(x[0]);
  if (x.back() - x.front() > 1.0) {
    std::vector<double> hi(x.begin() + 1, x.end()), lo(x.begin(), x.end() - 1);
    return (exp_divided_difference(hi) - exp_divided_difference(lo)) / (x.back() - x.front());
  }
  // Shift to the mean: exp[x] = e^mu sum_n h_n(y) / (n + k)!, y = x - mu.
  const double mu = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - mu;
  std::vector<double> h(x.size(), 1.0);  // h_n restricted to the first j+1 variables
  double fact = 1.0;
  for (std::size_t i = 2; i <= k; ++i) fact *= static_cast<double>(i);
  double sum = 1.0 / fact;
  // |y_i| <= 1, so 30 terms are far below double precision.
  for (int n = 1; n <= 30; ++n) {
    double prev = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      h[j] = prev + y[j] * h[j];
      prev = h[j];
    }
    fact *= static_cast<double>(static_cast<std::size_t>(n) + k);
    sum += h.back() / fact;
  }
  return std::exp(mu) * sum;
}

SymmetricExp::SymmetricExp(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(s));
  q_ = es.eigenvectors();
  lambda_ = es.eigenvalues();
  Vec e = lambda_.array().exp();
  value_ = sym(q_ * e.asDiagonal() * q_.transpose());
}

Mat SymmetricExp::d1(const Mat& e) const {
  const int n = static_cast<int>(lambda_.size());
  Mat eb = q_.transpose() * e * q_;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) eb(i, j) *= exp_divided_difference({lambda_(i), lambda_(j)});
  return sym(q_ * eb * q_.transpose());
}

Mat SymmetricExp::d2(const Mat& e, const Mat& f) const {
  const int n = static_cast<int>(lambda_.size());
  const Mat eb = q_.transpose() * e * q_;
  const Mat fb = q_.transpose() * f * q_;
  Mat r = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        r(i, j) += exp_divided_difference({lambda_(i), lambda_(k), lambda_(j)}) *
                   (eb(i, k) * fb(k, j) + fb(i, k) * eb(k, j));
  return sym(q_ * r * q_.transpose());
}

MetricField::MetricField(MarkedConfiguration marks, MetricMode mode, double lambda)
    : marks_(std::move(marks)), mode_(mode), lambda_(mode == MetricMode::kSum ? lambda : 1.0) {
  const int d = marks_.config.dim();
  if (mode == MetricMode::kSum && !(lambda > 0.0)) throw InvalidArgument("metric field: lambda must be positive");
  base_ = lambda_ * Mat::Identity(d, d);
  for (const KernelSpec& k : marks_.marks) {
    if (!(k.radius > 0.0)) throw InvalidArgument("kernel radius must be positive");
    if (k.amplitude.rows() != d || k.amplitude.cols() != d)
      throw InvalidArgument("kernel amplitude must be d x d");
    if (!(k.amplitude - k.amplitude.transpose()).isZero(1e-14 * (1.0 + k.amplitude.norm())))
      throw InvalidArgument("kernel amplitude must be symmetric");
    max_radius_ = std::max(max_radius_, k.radius);
  }
}

MetricField MetricField::constant(const Mat& m) {
  const int d = static_cast<int>(m.rows());
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  if (!(es.eigenvalues()(0) > 0.0)) throw InvalidArgument("constant metric must be positive definite");
  MetricField f(MarkedConfiguration::make(Window::cube(d, -1, 1), 0, {}, {}, true), MetricMode::kSum,
                es.eigenvalues()(0));
  f.base_ = m;
  return f;
}

bool MetricField::in_core(const Vec& x) const {
  if (marks_.config.complete()) return true;
  return marks_.config.window().contains_ball(x, max_radius_);
}

template <class Fn>
void MetricField::for_each_kernel(const Vec& x, double reach, Fn&& fn) const {
  if (marks_.marks.empty()) return;
  marks_.config.for_each_in_ball(x, reach, [&](std::size_t i) { fn(i, Vec(x - marks_.config[i])); });
}

Mat MetricField::finish(const Mat& s) const {
  if (mode_ == MetricMode::kSum) return s + base_;
  return SymmetricExp(s).value();
}

Mat MetricField::metric_at(const Vec& x) const {
  const int d = dim();
  Mat s = Mat::Zero(d, d);
  for_each_kernel(x, max_radius_, [&](std::size_t i, const Vec& z) { s += kernel_value(marks_.marks[i], z); });
  return finish(s);
}

std::vector<Mat> MetricField::metric_grad_at(const Vec& x) const {
  std::vector<Mat> ds;
  metric_and_grad_at(x, ds);
  return ds;
}

Mat MetricField::metric_and_grad_at(const Vec& x, std::vector<Mat>& grad) const {
  const int d = dim();
  Mat s = Mat::Zero(d, d);
  std::vector<Mat> ds(static_cast<std::size_t>(d), Mat::Zero(d, d));
  for_each_kernel(x, max_radius_, [&](std::size_t i, const Vec& z) {
    const KernelSpec& k = marks_.marks[i];
    s += kernel_value(k, z);
    for (int c = 0; c < d; ++c) ds[static_cast<std::size_t>(c)] += kernel_dir(k, z, Vec::Unit(d, c));
  });
  if (mode_ == MetricMode::kSum) {
    grad = std::move(ds);
    return s + base_;
  }
  const SymmetricExp e(s);
  for (auto& m : ds) m = e.d1(m);
  grad = std::move(ds);
  return e.value();
}

MetricField::Pulled MetricField::pulled(const Vec& x, const ShearMap* xi, int order) const {
  const int d = dim();
  const int m = d - 1;
  Mat s = Mat::Zero(d, d);
  std::vector<Mat> ds(order >= 1 ? static_cast<std::size_t>(m) : 0, Mat::Zero(d, d));
  std::vector<std::vector<Mat>> d2s(order >= 2 ? static_cast<std::size_t>(m) : 0,
                                    std::vector<Mat>(static_cast<std::size_t>(m), Mat::Zero(d, d)));
  double reach = max_radius_;
  if (xi != nullptr) reach *= 1.0 + xi->offset().norm() / xi->frame().v().norm() + 1e-12;
  for_each_kernel(x, reach, [&](std::size_t i, const Vec& z) {
    const KernelSpec& k = marks_.marks[i];
    const Vec zz = xi != nullptr ? xi->apply(z) : z;
    s += kernel_value(k, zz);
    if (order >= 1 && xi != nullptr) {
      const double a = xi->frame().axial(z);
      for (int j = 0; j < m; ++j) {
        ds[static_cast<std::size_t>(j)] += a * kernel_dir(k, zz, xi->frame().h(j));
        if (order >= 2)
          for (int l = 0; l < m; ++l)
            d2s[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)] +=
                a * a * kernel_dir2(k, zz, xi->frame().h(j), xi->frame().h(l));
      }
    }
  });
  Pulled p;
  if (mode_ == MetricMode::kSum) {
    p.g = s + base_;
    p.dg = std::move(ds);
    p.d2g = std::move(d2s);
    return p;
  }
  const SymmetricExp e(s);
  p.g = e.value();
  p.dg.resize(ds.size());
  for (std::size_t j = 0; j < ds.size(); ++j) p.dg[j] = e.d1(ds[j]);
  p.d2g.resize(d2s.size());
  for (std::size_t j = 0; j < d2s.size(); ++j)
    for (std::size_t l = 0; l < d2s.size(); ++l) p.d2g[j].push_back(e.d2(ds[j], ds[l]) + e.d1(d2s[j][l]));
  return p;
}

Mat MetricField::pulled_dir_at_identity(const Vec& x, const ShearFrame& frame, const Vec& e) const {
  const int d = dim();
  Mat s = Mat::Zero(d, d), ds = Mat::Zero(d, d);
  for_each_kernel(x, max_radius_, [&](std::size_t i, const Vec& z) {
    const KernelSpec& k = marks_.marks[i];
    s += kernel_value(k, z);
    ds += frame.axial(z) * kernel_dir(k, z, e);
  });
  if (mode_ == MetricMode::kSum) return ds;
  return SymmetricExp(s).d1(ds);
}

// ---- paths ------------------------------------------------------------------------

double PolyPath::total_time() const {
  if (durations.empty()) return vertices.empty() ? 0.0 : static_cast<double>(vertices.size() - 1);
  return std::accumulate(durations.begin(), durations.end(), 0.0);
}

void validate(const PolyPath& p) {
  if (p.vertices.size() < 2) throw InvalidArgument("polypath needs at least 2 vertices");
  for (const Vec& v : p.vertices)
    if (!v.allFinite()) throw InvalidArgument("polypath vertices must be finite");
  if (!p.durations.empty() && p.durations.size() + 1 != p.vertices.size())
    throw InvalidArgument("polypath durations must match segments");
}

namespace {

double simpson_weight(int k, int n) {
  if (k == 0 || k == n) return 1.0 / (3.0 * n);
  return (k % 2 == 1 ? 4.0 : 2.0) / (3.0 * n);
}

void check_rule(QuadratureRule q) {
  if (q.subintervals < 2 || q.subintervals % 2 != 0)
    throw InvalidArgument("quadrature: subintervals must be even and >= 2");
}

}  // namespace

double segment_length(const MetricField& field, const Vec& a, const Vec& b, QuadratureRule q) {
  check_rule(q);
  const Vec delta = b - a;
  const int n = q.subintervals;
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double s = static_cast<double>(k) / n;
    const Mat g = field.metric_at(a + s * delta);
    sum += simpson_weight(k, n) * std::sqrt(std::max(0.0, delta.dot(g * delta)));
  }
  return sum;
}

double path_length(const MetricField& field, const PolyPath& path, QuadratureRule q) {
  validate(path);
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i)
    len += segment_length(field, path.vertices[i], path.vertices[i + 1], q);
  return len;
}

double path_length_grad(const MetricField& field, const std::vector<Vec>& vertices,
                        std::vector<Vec>& grad, QuadratureRule q) {
  check_rule(q);
  const int d = field.dim();
  grad.assign(vertices.size(), Vec::Zero(d));
  double len = 0.0;
  const int n = q.subintervals;
  std::vector<Mat> dg;
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
    const Vec& a = vertices[i];
    const Vec delta = vertices[i + 1] - a;
    for (int k = 0; k <= n; ++k) {
      const double s = static_cast<double>(k) / n;
      const Vec x = a + s * delta;
      const Mat g = field.metric_and_grad_at(x, dg);
      const Vec gd = g * delta;
      const double qv = delta.dot(gd);
      const double root = std::sqrt(std::max(0.0, qv));
      const double w = simpson_weight(k, n);
      len += w * root;
      if (!(root > 0.0)) continue;
      Vec dq_dx(d);
      for (int c = 0; c < d; ++c) dq_dx(c) = delta.dot(dg[static_cast<std::size_t>(c)] * delta);
      // q depends on a through x (weight 1 - s) and on delta (weight -1).
      const Vec ga = (1.0 - s) * dq_dx - 2.0 * gd;
      const Vec gb = s * dq_dx + 2.0 * gd;
      grad[i] += w * ga / (2.0 * root);
      grad[i + 1] += w * gb / (2.0 * root);
    }
  }
  return len;
}

// ---- geodesic solver ----------------------------------------------------------------

namespace {

std::vector<std::array<int, 3>> neighbour_offsets(int d) {
  std::vector<std::array<int, 3>> out;
  const int zr = d == 3 ? 2 : 0;
  for (int c2 = -zr; c2 <= zr; ++c2)
    for (int c1 = -2; c1 <= 2; ++c1)
      for (int c0 = -2; c0 <= 2; ++c0) {
        if (c0 == 0 && c1 == 0 && c2 == 0) continue;
        if (std::gcd(std::gcd(std::abs(c0), std::abs(c1)), std::abs(c2)) != 1) continue;
        out.push_back({c0, c1, c2});
      }
  return out;
}

struct Lattice {
  Vec x, y;
  Vec axis[3];
  double h = 0.0;
  int n_along = 0;
  std::array<int, 3> lo{0, 0, 0}, ext{1, 1, 1};
  std::vector<int> node_of;  // dense box -> node index or -1
  std::vector<std::array<int, 3>> coord;
  std::vector<Vec> pos;

  long flat(const std::array<int, 3>& c) const {
    for (int k = 0; k < 3; ++k)
      if (c[k] < lo[k] || c[k] >= lo[k] + ext[k]) return -1;
    return (c[0] - lo[0]) + static_cast<long>(ext[0]) * ((c[1] - lo[1]) + static_cast<long>(ext[1]) * (c[2] - lo[2]));
  }
  Vec position(const std::array<int, 3>& c, int d) const {
    if (c[0] == 0 && c[1] == 0 && c[2] == 0) return x;
    if (c[0] == n_along && c[1] == 0 && c[2] == 0) return y;
    Vec p = x;
    for (int k = 0; k < d; ++k) p += (h * c[k]) * axis[k];
    return p;
  }
};

constexpr double kLatticeBasinSlack = 0.03;  // above the 16-neighbour stencil's 2.8% anisotropy
constexpr int kLatticeExtraStarts = 4;
constexpr int kScreeningIterations = 40;
constexpr std::size_t kScreeningVertices = 16;

// Lattice shortest path plus up to kLatticeExtraStarts near-optimal lattice
// paths through other basins; candidates[0] is the lattice optimum.
RiemannianGeodesic lattice_phase(const MetricField& field, const Vec& x, const Vec& y,
                                 const RiemannianOptions& opts, std::vector<std::vector<Vec>>& candidates) {
  const int d = field.dim();
  if (x.size() != d || y.size() != d) throw InvalidArgument("riemannian geodesic: dimension mismatch");
  if (bit_equal(x, y)) throw InvalidArgument("riemannian geodesic: x must differ from y");
  if (opts.grid_divisions < 1) throw InvalidArgument("riemannian geodesic: grid_divisions must be >= 1");
  if (!field.in_core(x) || !field.in_core(y))
    throw InvalidArgument("riemannian geodesic: endpoints must lie in the core region");

  RiemannianGeodesic res;
  const double dist = (y - x).norm();
  res.chord_length = segment_length(field, x, y, opts.quadrature);
  Eigen::SelfAdjointEigenSolver<Mat> es(field.base());
  const double floor_eig = field.mode() == MetricMode::kSum ? es.eigenvalues()(0) : 1.0;
  // Any path no longer than the chord has Euclidean length <= chord / sqrt(floor).
  res.kappa = std::max(1.0, res.chord_length / (std::sqrt(floor_eig) * dist));
  const double margin = opts.corridor_margin >= 0.0 ? opts.corridor_margin : dist / 32.0;
  const double budget = res.kappa * dist + 2.0 * margin;

  Lattice lat;
  lat.x = x;
  lat.y = y;
  lat.n_along = opts.grid_divisions;
  lat.h = dist / opts.grid_divisions;
  const ShearFrame frame((y - x) / dist);
  lat.axis[0] = frame.v();
  for (int j = 0; j < d - 1; ++j) lat.axis[j + 1] = frame.h(j);
  const double semi_major = 0.5 * budget;
  const double semi_minor = 0.5 * std::sqrt(std::max(0.0, budget * budget - dist * dist));
  lat.lo = {static_cast<int>(std::floor((0.5 * dist - semi_major) / lat.h)) - 1,
            -static_cast<int>(std::ceil(semi_minor / lat.h)) - 1, 0};
  std::array<int, 3> hi{static_cast<int>(std::ceil((0.5 * dist + semi_major) / lat.h)) + 1,
                        static_cast<int>(std::ceil(semi_minor / lat.h)) + 1, 0};
  if (d == 3) {
    lat.lo[2] = lat.lo[1];
    hi[2] = hi[1];
  }
  for (int k = 0; k < 3; ++k) lat.ext[k] = hi[k] - lat.lo[k] + 1;
  const long box = static_cast<long>(lat.ext[0]) * lat.ext[1] * lat.ext[2];
  if (box > 50'000'000) throw InvalidArgument("riemannian geodesic: corridor lattice too large");
  lat.node_of.assign(static_cast<std::size_t>(box), -1);
  const Vec mid = 0.5 * (x + y);
  double far = 0.0;
  std::array<int, 3> c{0, 0, 0};
  for (c[2] = lat.lo[2]; c[2] < lat.lo[2] + lat.ext[2]; ++c[2])
    for (c[1] = lat.lo[1]; c[1] < lat.lo[1] + lat.ext[1]; ++c[1])
      for (c[0] = lat.lo[0]; c[0] < lat.lo[0] + lat.ext[0]; ++c[0]) {
        const Vec p = lat.position(c, d);
        const bool endpoint = (c[1] == 0 && c[2] == 0 && (c[0] == 0 || c[0] == lat.n_along));
        if (!endpoint && (p - x).norm() + (p - y).norm() > budget) continue;
        lat.node_of[static_cast<std::size_t>(lat.flat(c))] = static_cast<int>(lat.pos.size());
        lat.coord.push_back(c);
        lat.pos.push_back(p);
        far = std::max(far, (p - mid).norm());
      }
  res.lattice_nodes = lat.pos.size();
  for (const Vec& p : lat.pos)
    if (!field.in_core(p))
      throw SolverError("riemannian geodesic: corridor escapes the sampled window",
                        far + field.max_kernel_radius());

  const int src = lat.node_of[static_cast<std::size_t>(lat.flat({0, 0, 0}))];
  const int dst = lat.node_of[static_cast<std::size_t>(lat.flat({lat.n_along, 0, 0}))];
  const auto offsets = neighbour_offsets(d);
  // The offset list is point-symmetric (offsets[k] = -offsets[K-1-k]), so each
  // edge length is evaluated once and shared by both directions.
  const std::size_t nk = offsets.size();
  std::vector<double> edge(lat.pos.size() * nk, -1.0);
  // Full shortest-path trees from both ends.
  auto tree = [&](int root, int stop, std::vector<double>& lab, std::vector<int>& pred) {
    lab.assign(lat.pos.size(), kInf);
    pred.assign(lat.pos.size(), -1);
    std::vector<std::uint8_t> done(lat.pos.size(), 0);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    lab[static_cast<std::size_t>(root)] = 0.0;
    heap.push({0.0, root});
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (done[static_cast<std::size_t>(u)]) continue;
      done[static_cast<std::size_t>(u)] = 1;
      if (u == stop) break;
      const auto cu = lat.coord[static_cast<std::size_t>(u)];
      for (std::size_t k = 0; k < nk; ++k) {
        const auto& o = offsets[k];
        const long f = lat.flat({cu[0] + o[0], cu[1] + o[1], cu[2] + o[2]});
        if (f < 0) continue;
        const int v = lat.node_of[static_cast<std::size_t>(f)];
        if (v < 0 || done[static_cast<std::size_t>(v)]) continue;
        double& w = edge[static_cast<std::size_t>(u) * nk + k];
        if (w < 0.0) {
          w = segment_length(field, lat.pos[static_cast<std::size_t>(u)], lat.pos[static_cast<std::size_t>(v)],
                             opts.quadrature);
          edge[static_cast<std::size_t>(v) * nk + (nk - 1 - k)] = w;
        }
        const double cand = du + w;
        if (cand < lab[static_cast<std::size_t>(v)]) {
          lab[static_cast<std::size_t>(v)] = cand;
          pred[static_cast<std::size_t>(v)] = u;
          heap.push({cand, v});
        }
      }
    }
  };
  std::vector<double> from_x, from_y;
  std::vector<int> pred_x, pred_y;
  // A constant metric has a single basin: the straight segment.
  const bool single_basin = field.marks().marks.empty();
  tree(src, single_basin ? dst : -1, from_x, pred_x);
  const double best = from_x[static_cast<std::size_t>(dst)];
  res.lattice_length = best;
  if (single_basin) {
    pred_y.assign(lat.pos.size(), -1);
  } else {
    tree(dst, -1, from_y, pred_y);
  }

  // Lattice path x -> via -> y.
  auto path_via = [&](int via) {
    std::deque<Vec> out;
    for (int v = via; v >= 0; v = pred_x[static_cast<std::size_t>(v)]) out.push_front(lat.pos[static_cast<std::size_t>(v)]);
    for (int v = pred_y[static_cast<std::size_t>(via)]; v >= 0; v = pred_y[static_cast<std::size_t>(v)])
      out.push_back(lat.pos[static_cast<std::size_t>(v)]);
    return std::vector<Vec>(out.begin(), out.end());
  };
  candidates.clear();
  candidates.push_back(path_via(dst));
  if (single_basin) return res;

  // Other basins: nodes whose best path through them is within the lattice's
  // anisotropy error of the optimum, taken greedily by distance from the
  // paths already chosen.
  const double slack = (1.0 + kLatticeBasinSlack) * best;
  const double separation = std::max(4.0 * lat.h, 0.05 * dist);
  std::vector<int> pool;
  std::vector<double> gap;
  for (std::size_t u = 0; u < lat.pos.size(); ++u)
    if (from_x[u] + from_y[u] <= slack) pool.push_back(static_cast<int>(u));
  gap.assign(pool.size(), kInf);
  auto update_gap = [&](const std::vector<Vec>& path) {
    for (std::size_t i = 0; i < pool.size(); ++i)
      for (const Vec& p : path) gap[i] = std::min(gap[i], (lat.pos[static_cast<std::size_t>(pool[i])] - p).norm());
  };
  update_gap(candidates.front());
  while (static_cast<int>(candidates.size()) <= kLatticeExtraStarts) {
    std::size_t arg = pool.size();
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (gap[i] > separation && (arg == pool.size() || gap[i] > gap[arg])) arg = i;
    if (arg == pool.size()) break;
    candidates.push_back(path_via(pool[arg]));
    update_gap(candidates.back());
  }
  return res;
}

// L-BFGS with Armijo backtracking over the interior vertices.
void refine(const MetricField& field, std::vector<Vec>& vertices, const RiemannianOptions& opts,
            RiemannianGeodesic& res) {
  const int d = field.dim();
  const std::size_t nv = vertices.size();
  const Eigen::Index n = static_cast<Eigen::Index>((nv - 2) * static_cast<std::size_t>(d));
  std::vector<Vec> grad_v;
  double f = path_length_grad(field, vertices, grad_v, opts.quadrature);
  res.length = f;
  if (n == 0) {
    res.converged = true;
    return;
  }
  auto pack = [&](const std::vector<Vec>& vs) {
    Eigen::VectorXd out(n);
    for (std::size_t i = 1; i + 1 < nv; ++i) out.segment(static_cast<Eigen::Index>((i - 1) * d), d) = vs[i];
    return out;
  };
  auto unpack = [&](const Eigen::VectorXd& z, std::vector<Vec>& vs) {
    for (std::size_t i = 1; i + 1 < nv; ++i) vs[i] = z.segment(static_cast<Eigen::Index>((i - 1) * d), d);
  };
  Eigen::VectorXd z = pack(vertices), g = pack(grad_v);
  const int memory = 8;
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::vector<Vec> trial = vertices;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    res.gradient_norm = g.norm();
    if (res.gradient_norm < opts.gradient_tol) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      const double rho = 1.0 / y_hist[static_cast<std::size_t>(i)].dot(s_hist[static_cast<std::size_t>(i)]);
      alpha[static_cast<std::size_t>(i)] = rho * s_hist[static_cast<std::size_t>(i)].dot(q);
      q -= alpha[static_cast<std::size_t>(i)] * y_hist[static_cast<std::size_t>(i)];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      q *= std::min(1.0, (vertices[1] - vertices[0]).norm() / res.gradient_norm);
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double rho = 1.0 / y_hist[i].dot(s_hist[i]);
      const double beta = rho * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      dir = -g * std::min(1.0, (vertices[1] - vertices[0]).norm() / res.gradient_norm);
      slope = g.dot(dir);
    }
    double step = 1.0;
    bool accepted = false;
    double f_new = f;
    Eigen::VectorXd z_new, g_new;
    std::vector<Vec> gv;
    for (int ls = 0; ls < 50; ++ls) {
      z_new = z + step * dir;
      unpack(z_new, trial);
      bool ok = true;
      for (std::size_t i = 1; i + 1 < nv && ok; ++i) ok = field.in_core(trial[i]);
      if (ok) {
        f_new = path_length_grad(field, trial, gv, opts.quadrature);
        if (f_new <= f + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;
    g_new = pack(gv);
    const Eigen::VectorXd s = z_new - z, yv = g_new - g;
    if (s.dot(yv) > 1e-16 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    z = z_new;
    g = g_new;
    f = f_new;
    vertices = trial;
  }
  res.iterations = it;
  res.gradient_norm = g.norm();
  if (res.gradient_norm < opts.gradient_tol) res.converged = true;
  res.length = f;
}

template <class Solve>
RiemannianGeodesic canonical(const Vec& x, const Vec& y, Solve&& solve) {
  if (!lex_less(y, x)) return solve(x, y);
  RiemannianGeodesic g = solve(y, x);
  std::reverse(g.path.vertices.begin(), g.path.vertices.end());
  std::reverse(g.path.durations.begin(), g.path.durations.end());
  return g;
}

}  // namespace

double riemannian_distance(const MetricField& field, const Vec& x, const Vec& y,
                           const RiemannianOptions& opts) {
  if (bit_equal(x, y)) return 0.0;
  return riemannian_geodesic(field, x, y, opts).length;
}

RiemannianGeodesic lattice_geodesic(const MetricField& field, const Vec& x, const Vec& y,
                                    const RiemannianOptions& opts) {
  return canonical(x, y, [&](const Vec& a, const Vec& b) {
    std::vector<std::vector<Vec>> cands;
    RiemannianGeodesic res = lattice_phase(field, a, b, opts, cands);
    res.path.vertices = std::move(cands.front());
    res.length = res.lattice_length;
    return res;
  });
}

RiemannianGeodesic riemannian_geodesic(const MetricField& field, const Vec& x, const Vec& y,
                                       const RiemannianOptions& opts) {
  return canonical(x, y, [&](const Vec& a, const Vec& b) {
    std::vector<std::vector<Vec>> cands;
    RiemannianGeodesic res = lattice_phase(field, a, b, opts, cands);
    // Screen every start with a short refinement, then finish the best one.
    std::size_t pick = 0;
    if (cands.size() > 1) {
      RiemannianOptions screen = opts;
      screen.max_iterations = std::min(opts.max_iterations, kScreeningIterations);
      double best = kInf;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        // Screen on a decimated copy: fewer segments per iteration.
        const std::size_t stride = std::max<std::size_t>(1, cands[i].size() / kScreeningVertices);
        std::vector<Vec> coarse;
        for (std::size_t k = 0; k + 1 < cands[i].size(); k += stride) coarse.push_back(cands[i][k]);
        coarse.push_back(cands[i].back());
        RiemannianGeodesic r = res;
        refine(field, coarse, screen, r);
        if (r.length < best) {
          best = r.length;
          pick = i;
        }
      }
    }
    res.starts = static_cast<int>(cands.size());
    std::vector<Vec> verts = std::move(cands[pick]);
    refine(field, verts, opts, res);
    if (res.chord_length <= res.length) {
      res.path.vertices = {a, b};
      res.length = res.chord_length;
      res.chord_returned = true;
    } else {
      res.path.vertices = std::move(verts);
    }
    return res;
  });
}

PolyPath unit_speed_reparametrize(const MetricField& field, const PolyPath& path, QuadratureRule q) {
  validate(path);
  const auto& vs = path.vertices;
  constexpr double kSnap = 1e-6;  // break points this close to a vertex are merged into it
  PolyPath out;
  out.vertices.push_back(vs.front());
  double cum = 0.0;  // Riemannian length up to vs[i]
  auto emit = [&](const Vec& p) {
    const double len = segment_length(field, out.vertices.back(), p, q);
    if (!(len > 0.0)) return;
    out.vertices.push_back(p);
    out.durations.push_back(len);
  };
  for (std::size_t i = 0; i + 1 < vs.size(); ++i) {
    const Vec& a = vs[i];
    const Vec delta = vs[i + 1] - a;
    const double len = segment_length(field, a, vs[i + 1], q);
    // Break points at integer arc length strictly inside the segment.
    for (double m = std::floor(cum + kSnap) + 1.0; m < cum + len - kSnap; m += 1.0) {
      const double target = m - cum;
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (segment_length(field, a, a + mid * delta, q) < target ? lo : hi) = mid;
      }
      emit(a + hi * delta);
    }
    emit(vs[i + 1]);
    cum += len;
  }
  if (out.vertices.size() < 2) throw InvalidArgument("unit_speed_reparametrize: path has zero length");
  return out;
}

// ---- serialization --------------------------------------------------------------

std::string mode_name(MetricMode m) { return m == MetricMode::kSum ? "sum" : "product"; }

MetricMode mode_from_name(const std::string& s) {
  if (s == "sum") return MetricMode::kSum;
  if (s == "product") return MetricMode::kProduct;
  throw InvalidArgument("unknown metric mode: " + s);
}

nlohmann::json to_json(const MetricField& f) {
  nlohmann::json j{{"mode", mode_name(f.mode())}, {"lambda", f.lambda()}, {"environment", to_json(f.marks())}};
  return j;
}

nlohmann::json to_json(const RiemannianGeodesic& g) {
  nlohmann::json verts = nlohmann::json::array();
  for (const Vec& v : g.path.vertices) {
    nlohmann::json a = nlohmann::json::array();
    for (int k = 0; k < v.size(); ++k) a.push_back(v(k));
    verts.push_back(a);
  }
  return {{"length", g.length},
          {"lattice_length", g.lattice_length},
          {"chord_length", g.chord_length},
          {"kappa", g.kappa},
          {"lattice_nodes", g.lattice_nodes},
          {"iterations", g.iterations},
          {"gradient_norm", g.gradient_norm},
          {"converged", g.converged},
          {"chord_returned", g.chord_returned},
          {"vertices", verts}};
}

}  // namespace fpp
