#include "fpp/bl_geodesic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <map>
#include <queue>
#include <unordered_map>

namespace fpp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nodes of one localization round with a unit-cell grid over them and a
// max-pyramid used to prune the long-edge verification.
class LocalGraph {
 public:
  LocalGraph(const PointConfiguration& env, const Vec& x, const Vec& y, bool two_endpoints,
             const Vec& center, double radius, const std::vector<Vec>* extra = nullptr) {
    d_ = env.dim();
    add_node(x, env.find(x));
    if (two_endpoints) add_node(y, env.find(y));
    std::unordered_map<long, std::uint32_t> node_of_env;
    env.for_each_in_ball(center, radius, [&](std::size_t i) {
      const Vec& p = env[i];
      if (bit_equal(p, x) || (two_endpoints && bit_equal(p, y))) return;
      node_of_env[static_cast<long>(i)] = static_cast<std::uint32_t>(pos_.size());
      add_node(p, static_cast<long>(i));
    });
    // Extra query points are ordinary (penalised) vertices; every path
    // through them is a genuine path, so distances stay exact.
    if (extra != nullptr) {
      auto less = [](const Vec& a, const Vec& b) { return lex_less(a, b); };
      std::map<Vec, long, decltype(less)> seen(less);
      for (const Vec& e : *extra) {
        if (auto it = seen.find(e); it != seen.end()) {
          extra_node_.push_back(it->second);
          continue;
        }
        if (bit_equal(e, x)) {
          extra_node_.push_back(0);
          continue;
        }
        const long idx = env.find(e);
        if (idx >= 0) {
          auto it = node_of_env.find(idx);
          extra_node_.push_back(it == node_of_env.end() ? -1 : static_cast<long>(it->second));
          continue;
        }
        extra_node_.push_back(static_cast<long>(pos_.size()));
        seen.emplace(e, static_cast<long>(pos_.size()));
        add_node(e, -1);
      }
    }
    build_grid();
    extra_.resize(pos_.size());
  }

  std::size_t size() const { return pos_.size(); }
  const Vec& pos(std::size_t i) const { return pos_[i]; }
  int pen(std::size_t i) const { return pen_[i]; }
  long env_index(std::size_t i) const { return env_index_[i]; }
  const std::vector<std::uint32_t>& extra(std::size_t i) const { return extra_[i]; }
  /// Node of each extra query point (-1 if it is a configuration point outside the ball).
  const std::vector<long>& extra_nodes() const { return extra_node_; }

  bool add_extra(std::uint32_t u, std::uint32_t v) {
    auto& eu = extra_[u];
    if (std::find(eu.begin(), eu.end(), v) != eu.end()) return false;
    eu.push_back(v);
    extra_[v].push_back(u);
    ++n_extra_;
    return true;
  }
  std::size_t n_extra() const { return n_extra_; }

  template <class Fn>
  void for_each_within(std::size_t u, double s, Fn&& fn) const {
    std::array<long, 3> a{0, 0, 0}, b{0, 0, 0};
    for (int k = 0; k < d_; ++k) {
      a[k] = std::max(0L, cell_coord(pos_[u](k) - s, k));
      b[k] = std::min(n_[k] - 1, cell_coord(pos_[u](k) + s, k));
      if (a[k] > b[k]) return;
    }
    const double s2 = s * s;
    for (long c2 = a[2]; c2 <= b[2]; ++c2)
      for (long c1 = a[1]; c1 <= b[1]; ++c1)
        for (long c0 = a[0]; c0 <= b[0]; ++c0) {
          const long f = c0 + n_[0] * (c1 + n_[1] * c2);
          for (std::uint32_t q = start_[f]; q < start_[f + 1]; ++q) {
            const std::uint32_t v = items_[q];
            if (v != u && (pos_[v] - pos_[u]).squaredNorm() <= s2) fn(v);
          }
        }
  }

  /// Calls fn(v) for every node v != u in cells whose pyramid bound survives
  /// `keep(mindist, block_max)`.
  template <class Keep, class Fn>
  void descend(std::size_t u, Keep&& keep, Fn&& fn) const {
    const int top = static_cast<int>(levels_.size()) - 1;
    std::array<long, 3> c{0, 0, 0};
    const std::array<long, 3>& dims = level_dims_[static_cast<std::size_t>(top)];
    for (c[2] = 0; c[2] < dims[2]; ++c[2])
      for (c[1] = 0; c[1] < dims[1]; ++c[1])
        for (c[0] = 0; c[0] < dims[0]; ++c[0]) visit(top, c, u, keep, fn);
  }

  void build_pyramid(const std::function<double(std::uint32_t)>& value) {
    levels_.clear();
    level_dims_.clear();
    std::vector<double> base(static_cast<std::size_t>(n_[0] * n_[1] * n_[2]), -kInf);
    for (std::size_t f = 0; f + 1 < start_.size(); ++f)
      for (std::uint32_t q = start_[f]; q < start_[f + 1]; ++q) base[f] = std::max(base[f], value(items_[q]));
    levels_.push_back(std::move(base));
    level_dims_.push_back(n_);
    while (true) {
      const auto& pd = level_dims_.back();
      if (pd[0] == 1 && pd[1] == 1 && pd[2] == 1) break;
      std::array<long, 3> nd{(pd[0] + 1) / 2, (pd[1] + 1) / 2, (pd[2] + 1) / 2};
      std::vector<double> lv(static_cast<std::size_t>(nd[0] * nd[1] * nd[2]), -kInf);
      const auto& prev = levels_.back();
      for (long z = 0; z < pd[2]; ++z)
        for (long yy = 0; yy < pd[1]; ++yy)
          for (long xx = 0; xx < pd[0]; ++xx) {
            const double val = prev[static_cast<std::size_t>(xx + pd[0] * (yy + pd[1] * z))];
            double& dst = lv[static_cast<std::size_t>(xx / 2 + nd[0] * (yy / 2 + nd[1] * (z / 2)))];
            dst = std::max(dst, val);
          }
      levels_.push_back(std::move(lv));
      level_dims_.push_back(nd);
    }
  }

 private:
  void add_node(const Vec& p, long idx) {
    pos_.push_back(p);
    pen_.push_back(idx >= 0 ? 0 : 1);
    env_index_.push_back(idx);
  }

  long cell_coord(double x, int k) const {
    return static_cast<long>(std::floor(x - origin_(k)));
  }

  void build_grid() {
    origin_ = pos_[0];
    Vec hi = pos_[0];
    for (const Vec& p : pos_) {
      origin_ = origin_.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    n_ = {1, 1, 1};
    for (int k = 0; k < d_; ++k) {
      origin_(k) = std::floor(origin_(k));
      n_[k] = cell_coord(hi(k), k) + 1;
    }
    const std::size_t cells = static_cast<std::size_t>(n_[0] * n_[1] * n_[2]);
    start_.assign(cells + 1, 0);
    std::vector<long> cell(pos_.size());
    for (std::size_t i = 0; i < pos_.size(); ++i) {
      long f = 0, mul = 1;
      for (int k = 0; k < d_; ++k) {
        f += mul * cell_coord(pos_[i](k), k);
        mul *= n_[k];
      }
      cell[i] = f;
      ++start_[static_cast<std::size_t>(f) + 1];
    }
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    items_.resize(pos_.size());
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pos_.size(); ++i)
      items_[fill[static_cast<std::size_t>(cell[i])]++] = static_cast<std::uint32_t>(i);
  }

  template <class Keep, class Fn>
  void visit(int level, const std::array<long, 3>& c, std::size_t u, Keep& keep, Fn& fn) const {
    const auto& dims = level_dims_[static_cast<std::size_t>(level)];
    const double bmax = levels_[static_cast<std::size_t>(level)]
                               [static_cast<std::size_t>(c[0] + dims[0] * (c[1] + dims[1] * c[2]))];
    if (bmax == -kInf) return;
    const double side = std::ldexp(1.0, level);
    double md2 = 0.0;
    for (int k = 0; k < d_; ++k) {
      const double lo = origin_(k) + static_cast<double>(c[k]) * side;
      const double hi = std::min(lo + side, origin_(k) + static_cast<double>(n_[k]));
      const double x = pos_[u](k);
      const double gap = x < lo ? lo - x : (x > hi ? x - hi : 0.0);
      md2 += gap * gap;
    }
    if (!keep(std::sqrt(md2), bmax)) return;
    if (level == 0) {
      const long f = c[0] + n_[0] * (c[1] + n_[1] * c[2]);
      for (std::uint32_t q = start_[f]; q < start_[f + 1]; ++q)
        if (items_[q] != u) fn(items_[q]);
      return;
    }
    const auto& cd = level_dims_[static_cast<std::size_t>(level - 1)];
    std::array<long, 3> ch{0, 0, 0};
    for (long dz = 0; dz < (d_ == 3 ? 2 : 1); ++dz)
      for (long dy = 0; dy < 2; ++dy)
        for (long dx = 0; dx < 2; ++dx) {
          ch = {2 * c[0] + dx, 2 * c[1] + dy, 2 * c[2] + dz};
          if (ch[0] < cd[0] && ch[1] < cd[1] && ch[2] < cd[2]) visit(level - 1, ch, u, keep, fn);
        }
  }

  int d_ = 2;
  std::vector<Vec> pos_;
  std::vector<std::uint8_t> pen_;
  std::vector<long> env_index_;
  std::vector<std::vector<std::uint32_t>> extra_;
  std::vector<long> extra_node_;
  std::size_t n_extra_ = 0;
  Vec origin_;
  std::array<long, 3> n_{1, 1, 1};
  std::vector<std::uint32_t> start_, items_;
  std::vector<std::vector<double>> levels_;
  std::vector<std::array<long, 3>> level_dims_;
};

struct Labels {
  std::vector<double> dist;
  std::vector<std::uint8_t> done;
  std::size_t expanded = 0;
};

double edge_cost(const LocalGraph& g, const BrokenLineCost& cost, std::uint32_t u, std::uint32_t v) {
  return cost.segment(g.pos(v) - g.pos(u), g.pen(u) + g.pen(v)).cost;
}

using Heap = std::priority_queue<std::pair<double, std::uint32_t>, std::vector<std::pair<double, std::uint32_t>>,
                                 std::greater<>>;

// Pops the heap until its minimum exceeds the bound. In repair mode settled
// nodes may still improve (new edges appeared) and are reopened.
void run_heap(const LocalGraph& g, const BrokenLineCost& cost, long target, double& bound, double edge_cap,
              Labels& lab, Heap& heap, bool repair) {
  auto relax = [&](std::uint32_t u, std::uint32_t v) {
    if (!repair && lab.done[v]) return;
    const double c = lab.dist[u] + edge_cost(g, cost, u, v);
    if (c <= bound && c < lab.dist[v]) {
      lab.dist[v] = c;
      lab.done[v] = 0;
      heap.push({c, v});
    }
  };
  while (!heap.empty()) {
    const auto [du, u] = heap.top();
    heap.pop();
    if (lab.done[u] || du != lab.dist[u]) continue;
    if (du > bound) break;
    lab.done[u] = 1;
    ++lab.expanded;
    if (static_cast<long>(u) == target) bound = std::min(bound, du);
    g.for_each_within(u, edge_cap, [&](std::uint32_t v) { relax(u, v); });
    for (std::uint32_t v : g.extra(u)) relax(u, v);
  }
}

// Label-setting search from `src` over short edges plus verified long edges.
// Nodes with distance <= bound are settled exactly; `target` (if >= 0)
// lowers the bound once it is settled.
void dijkstra(const LocalGraph& g, const BrokenLineCost& cost, std::uint32_t src, long target,
              double& bound, double edge_cap, Labels& lab) {
  const std::size_t n = g.size();
  lab.dist.assign(n, kInf);
  lab.done.assign(n, 0);
  lab.expanded = 0;
  Heap heap;
  lab.dist[src] = 0.0;
  heap.push({0.0, src});
  run_heap(g, cost, target, bound, edge_cap, lab, heap, false);
}

// Adds every long edge that could improve or tie a label at most `bound`.
// Returns the edges that were new.
std::vector<std::pair<std::uint32_t, std::uint32_t>> verify_long_edges(LocalGraph& g, const BrokenLineCost& cost,
                                                                       const Labels& lab, double bound,
                                                                       double edge_cap) {
  auto cap = [&](std::uint32_t v) { return lab.done[v] ? std::min(lab.dist[v], bound) : bound; };
  g.build_pyramid(cap);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> add, added;
  for (std::uint32_t u = 0; u < g.size(); ++u) {
    if (!lab.done[u] || lab.dist[u] > bound) continue;
    const double du = lab.dist[u];
    auto keep = [&](double mindist, double bmax) { return du + cost.envelope_floor(mindist) <= bmax; };
    g.descend(u, keep, [&](std::uint32_t v) {
      const double dd = (g.pos(v) - g.pos(u)).norm();
      if (dd <= edge_cap) return;
      const double cv = cap(v);
      if (du + cost.envelope_floor(dd) > cv) return;
      if (du + edge_cost(g, cost, u, v) <= cv) add.emplace_back(u, v);
    });
  }
  for (const auto& [u, v] : add)
    if (g.add_extra(u, v)) added.emplace_back(u, v);
  return added;
}

// Search plus long-edge verification until no edge is added; after each
// round only the labels the new edges improve are repaired.
void settle(LocalGraph& g, const BrokenLineCost& cost, std::uint32_t src, long target, double& bound,
            double edge_cap, Labels& lab) {
  double b = bound;
  dijkstra(g, cost, src, target, b, edge_cap, lab);
  for (;;) {
    const auto added = verify_long_edges(g, cost, lab, b, edge_cap);
    if (added.empty()) {
      bound = b;
      return;
    }
    Heap heap;
    for (const auto& [u, v] : added)
      for (const auto& [p, q] : {std::pair{u, v}, std::pair{v, u}}) {
        if (!lab.done[p] || lab.dist[p] > b) continue;
        const double c = lab.dist[p] + edge_cost(g, cost, p, q);
        if (c <= b && c < lab.dist[q]) {
          lab.dist[q] = c;
          lab.done[q] = 0;
          heap.push({c, q});
        }
      }
    run_heap(g, cost, target, b, edge_cap, lab, heap, true);
  }
}

struct Candidate {
  std::vector<Vec> binding;
  double cost = kInf;
};

// Preference among equal-cost minimisers: a direct segment first, then the
// path through the Poisson point of least norm, then lexicographic order of
// the binding sequence.
bool preferred(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  const bool a_direct = a.size() == 2, b_direct = b.size() == 2;
  if (a_direct != b_direct) return a_direct;
  auto min_norm = [](const std::vector<Vec>& s) {
    double m = kInf;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) m = std::min(m, s[i].squaredNorm());
    return m;
  };
  const double na = min_norm(a), nb = min_norm(b);
  if (na != nb) return na < nb;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), lex_less);
}

void check_endpoints(const PointConfiguration& env, const Vec& x, const Vec& y) {
  if (x.size() != env.dim() || y.size() != env.dim())
    throw InvalidArgument("geodesic: endpoint dimension mismatch");
  if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("geodesic: endpoints must be finite");
  if (!env.complete() && (!env.window().contains(x) || !env.window().contains(y)))
    throw InvalidArgument("geodesic: endpoints must lie in the environment window");
}

double largest_contained_radius(const Window& w, const Vec& c) {
  double r = kInf;
  for (int k = 0; k < w.dim(); ++k) r = std::min({r, c(k) - w.lower(k), w.upper(k) - c(k)});
  return std::max(r, 0.0);
}

bool ball_covers_all(const PointConfiguration& env, const Vec& c, double r) {
  const double r2 = r * r;
  for (const Vec& p : env.points())
    if ((p - c).squaredNorm() > r2) return false;
  return true;
}

double exit_term(const LocalGraph& g, const BrokenLineCost& cost, const Labels& lab, const Vec& c,
                 double radius, double bound) {
  double t = bound;
  for (std::size_t u = 0; u < g.size(); ++u) {
    if (!lab.done[u]) continue;
    const double gap = std::max(0.0, radius - (g.pos(u) - c).norm());
    t = std::min(t, lab.dist[u] + cost.envelope(gap));
  }
  return t;
}

}  // namespace

BrokenLineCost::BrokenLineCost(LagrangianSpec l, double penalty_unit)
    : lagrangian(std::move(l)), r(step_bound(lagrangian).r), penalty(penalty_unit) {
  if (!(penalty > 0.0)) throw InvalidArgument("penalty unit must be positive");
  build_envelope_table();
}

void BrokenLineCost::build_envelope_table() {
  const auto n = static_cast<std::size_t>(kEnvelopeTableRange * kEnvelopeTableDensity);
  auto t = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) (*t)[i] = envelope(static_cast<double>(i) / kEnvelopeTableDensity);
  envelope_table_ = std::move(t);
}

BrokenLineCost BrokenLineCost::scaled(double s) const {
  BrokenLineCost c;
  c.lagrangian = lagrangian.scaled(s);
  c.r = r;  // the minimisers do not change under a common scale
  c.penalty = penalty * s;
  c.build_envelope_table();
  return c;
}

double path_action(const PointConfiguration& env, const BrokenLineCost& cost,
                   const std::vector<Vec>& path) {
  if (path.empty()) throw InvalidArgument("path_action: empty path");
  if (path.size() == 1) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) s += cost.lagrangian.eval(path[i + 1] - path[i]);
  double pen = 0.5 * (env.contains_point(path.front()) ? 0.0 : 1.0) +
               0.5 * (env.contains_point(path.back()) ? 0.0 : 1.0);
  for (std::size_t i = 1; i + 1 < path.size(); ++i) pen += env.contains_point(path[i]) ? 0.0 : 1.0;
  return s + cost.penalty * pen;
}

double euclidean_length(const std::vector<Vec>& path) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) s += (path[i + 1] - path[i]).norm();
  return s;
}

DiscretePath expand_binding(const PointConfiguration& env, const std::vector<Vec>& binding,
                            const std::vector<long>& n_opt) {
  DiscretePath p;
  if (binding.empty()) return p;
  p.vertices.push_back(binding.front());
  for (std::size_t s = 0; s + 1 < binding.size(); ++s) {
    const Vec& a = binding[s];
    const Vec& b = binding[s + 1];
    const long n = n_opt[s];
    for (long k = 1; k < n; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(n);
      Vec v = t * b + (1.0 - t) * a;
      if (env.contains_point(v))
        throw Error("collinear Poisson triple: an evenly spaced interior vertex is a configuration point");
      p.vertices.push_back(std::move(v));
    }
    p.vertices.push_back(b);
  }
  p.penalty.reserve(p.vertices.size());
  for (const Vec& v : p.vertices) p.penalty.push_back(env.contains_point(v) ? 0 : 1);
  return p;
}

namespace {

// Minimisers are computed from the lexicographically smaller endpoint so the
// value is exactly symmetric; the binding is then reported from x to y.
GeodesicResult oriented(const PointConfiguration& env, const Vec& x, const Vec& y,
                        const std::function<GeodesicResult(const Vec&, const Vec&)>& solve) {
  if (!lex_less(y, x)) return solve(x, y);
  GeodesicResult g = solve(y, x);
  std::reverse(g.binding.begin(), g.binding.end());
  std::reverse(g.n_opt.begin(), g.n_opt.end());
  g.path = expand_binding(env, g.binding, g.n_opt);
  return g;
}

GeodesicResult geodesic_impl(const PointConfiguration& env, const BrokenLineCost& cost, const Vec& x,
                             const Vec& y, const GeodesicOptions& opts) {
  GeodesicResult res;
  if (bit_equal(x, y)) {
    res.binding = {x};
    res.path = expand_binding(env, res.binding, {});
    res.certified = true;
    return res;
  }
  const Vec c = 0.5 * (x + y);
  const double half = 0.5 * (y - x).norm();
  const double margin = opts.initial_margin >= 0.0 ? opts.initial_margin : std::max(3.0, 1.2 * half);
  double radius = std::max(opts.min_radius, half + margin);
  const double window_limit = env.complete() ? kInf : largest_contained_radius(env.window(), c);

  for (;;) {
    if (radius > window_limit) {
      if (window_limit > half && res.localization_radius < window_limit) {
        radius = window_limit;  // last attempt with everything the window offers
      } else {
        throw SolverError("uncertifiable localization: required radius exceeds the sampled window",
                          radius);
      }
    }
    ++res.rounds;
    LocalGraph g(env, x, y, true, c, radius);
    Labels from_x;
    double best = cost.segment(y - x, g.pen(0) + g.pen(1)).cost;
    settle(g, cost, 0, 1, best, opts.edge_cap, from_x);
    best = from_x.dist[1];

    bool certified = env.complete() && ball_covers_all(env, c, radius);
    double lb = certified ? kInf : 0.0;
    if (!certified) {
      Labels from_y;
      double b = best;
      settle(g, cost, 1, -1, b, opts.edge_cap, from_y);
      lb = exit_term(g, cost, from_x, c, radius, best) + exit_term(g, cost, from_y, c, radius, best);
      certified = lb >= best;
      // Edges added while settling from y can only confirm best, never lower it.
    }

    res.localization_radius = radius;
    res.inflation_margin = radius - half;
    res.exit_lower_bound = lb;
    res.graph_nodes = g.size();
    res.nodes_expanded = from_x.expanded;
    res.long_edges = g.n_extra();
    res.action = best;

    if (certified || radius >= window_limit) {
      res.certified = certified;
      if (!certified)
        throw SolverError("uncertifiable localization: required radius exceeds the sampled window",
                          radius * opts.growth);
      // Enumerate all tight minimisers and apply the tie rule.
      std::vector<std::vector<std::uint32_t>> paths;
      std::vector<std::uint32_t> stack{1};
      bool truncated = false;
      std::function<void(std::uint32_t)> walk = [&](std::uint32_t v) {
        if (truncated) return;
        if (v == 0) {
          paths.emplace_back(stack.rbegin(), stack.rend());
          if (paths.size() >= opts.max_tie_paths) truncated = true;
          return;
        }
        std::vector<std::uint32_t> preds;
        auto check = [&](std::uint32_t u) {
          if (from_x.done[u] && from_x.dist[u] + edge_cost(g, cost, u, v) == from_x.dist[v])
            preds.push_back(u);
        };
        g.for_each_within(v, opts.edge_cap, check);
        for (std::uint32_t u : g.extra(v)) check(u);
        std::sort(preds.begin(), preds.end());
        preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
        for (std::uint32_t u : preds) {
          stack.push_back(u);
          walk(u);
          stack.pop_back();
        }
      };
      walk(1);
      res.tie_enumeration_truncated = truncated;
      std::vector<Vec> chosen;
      std::vector<std::uint32_t> chosen_nodes;
      for (const auto& p : paths) {
        std::vector<Vec> b;
        b.reserve(p.size());
        for (std::uint32_t i : p) b.push_back(g.pos(i));
        if (chosen.empty() || preferred(b, chosen)) {
          chosen = std::move(b);
          chosen_nodes = p;
        }
      }
      res.binding = chosen;
      res.n_opt.clear();
      for (std::size_t s = 0; s + 1 < chosen_nodes.size(); ++s) {
        const std::uint32_t u = chosen_nodes[s], v = chosen_nodes[s + 1];
        res.n_opt.push_back(cost.segment(g.pos(v) - g.pos(u), g.pen(u) + g.pen(v)).n_opt);
      }
      res.path = expand_binding(env, res.binding, res.n_opt);
      return res;
    }
    radius *= opts.growth;
  }
}

GeodesicResult brute_force_impl(const PointConfiguration& env, const BrokenLineCost& cost,
                                const Vec& x, const Vec& y, std::size_t max_points) {
  if (max_points > 8) throw InvalidArgument("brute_force_geodesic: max_points must be <= 8");
  if (env.size() > max_points) throw InvalidArgument("brute_force_geodesic: too many points");
  GeodesicResult res;
  res.certified = true;
  if (bit_equal(x, y)) {
    res.binding = {x};
    res.path = expand_binding(env, res.binding, {});
    return res;
  }
  std::vector<Vec> pts;
  for (const Vec& p : env.points())
    if (!bit_equal(p, x) && !bit_equal(p, y)) pts.push_back(p);
  const int px = env.contains_point(x) ? 0 : 1;
  const int py = env.contains_point(y) ? 0 : 1;

  std::vector<Vec> best_binding;
  double best = kInf;
  std::vector<Vec> seq{x};
  std::vector<int> pen{px};
  std::vector<std::uint8_t> used(pts.size(), 0);
  std::function<void(double)> rec = [&](double acc) {
    // Close the sequence at y.
    {
      const double total = acc + cost.segment(y - seq.back(), pen.back() + py).cost;
      std::vector<Vec> b = seq;
      b.push_back(y);
      if (total < best || (total == best && preferred(b, best_binding))) {
        best = total;
        best_binding = std::move(b);
      }
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (used[i]) continue;
      used[i] = 1;
      const double next = acc + cost.segment(pts[i] - seq.back(), pen.back()).cost;
      seq.push_back(pts[i]);
      pen.push_back(0);
      rec(next);
      seq.pop_back();
      pen.pop_back();
      used[i] = 0;
    }
  };
  rec(0.0);
  res.action = best;
  res.binding = best_binding;
  for (std::size_t s = 0; s + 1 < best_binding.size(); ++s) {
    const int pa = s == 0 ? px : 0;
    const int pb = s + 2 == best_binding.size() ? py : 0;
    res.n_opt.push_back(cost.segment(best_binding[s + 1] - best_binding[s], pa + pb).n_opt);
  }
  res.path = expand_binding(env, res.binding, res.n_opt);
  res.graph_nodes = pts.size() + 2;
  return res;
}

}  // namespace

GeodesicResult geodesic(const PointConfiguration& env, const BrokenLineCost& cost, const Vec& x,
                        const Vec& y, const GeodesicOptions& opts) {
  check_endpoints(env, x, y);
  return oriented(env, x, y, [&](const Vec& a, const Vec& b) { return geodesic_impl(env, cost, a, b, opts); });
}

GeodesicResult brute_force_geodesic(const PointConfiguration& env, const BrokenLineCost& cost,
                                    const Vec& x, const Vec& y, std::size_t max_points) {
  check_endpoints(env, x, y);
  return oriented(env, x, y,
                  [&](const Vec& a, const Vec& b) { return brute_force_impl(env, cost, a, b, max_points); });
}

double action(const PointConfiguration& env, const BrokenLineCost& cost, const Vec& x, const Vec& y,
              const GeodesicOptions& opts) {
  if (bit_equal(x, y)) return 0.0;
  return geodesic(env, cost, x, y, opts).action;
}

SingleSourceResult single_source(const PointConfiguration& env, const BrokenLineCost& cost,
                                 const Vec& x, double radius, double bound,
                                 const std::vector<Vec>& queries, const GeodesicOptions& opts) {
  if (!env.complete() && !env.window().contains_ball(x, radius))
    throw SolverError("single_source: ball exceeds the sampled window", radius);
  LocalGraph g(env, x, x, false, x, radius, &queries);
  Labels lab;
  double b = bound;
  settle(g, cost, 0, -1, b, opts.edge_cap, lab);
  SingleSourceResult out;
  out.x_is_poisson = g.pen(0) == 0;
  out.exit_lower_bound = (env.complete() && ball_covers_all(env, x, radius))
                             ? kInf
                             : exit_term(g, cost, lab, x, radius, kInf);
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (g.env_index(i) < 0) continue;
    out.nodes.push_back(static_cast<std::size_t>(g.env_index(i)));
    out.dist.push_back(lab.done[i] ? lab.dist[i] : kInf);
  }
  for (long node : g.extra_nodes()) {
    const auto u = static_cast<std::size_t>(node);
    out.query_dist.push_back(node >= 0 && lab.done[u] ? lab.dist[u] : kInf);
  }
  return out;
}

nlohmann::json to_json(const GeodesicResult& g) {
  auto vj = [](const Vec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int k = 0; k < v.size(); ++k) a.push_back(v(k));
    return a;
  };
  nlohmann::json binding = nlohmann::json::array();
  for (const Vec& b : g.binding) binding.push_back(vj(b));
  return {{"action", g.action},
          {"binding_vertices", binding},
          {"n_opt", g.n_opt},
          {"path_vertices", g.path.vertices.size()},
          {"euclidean_length", euclidean_length(g.path.vertices)},
          {"audit",
           {{"certified", g.certified},
            {"localization_radius", g.localization_radius},
            {"inflation_margin", g.inflation_margin},
            {"exit_lower_bound", std::isfinite(g.exit_lower_bound) ? nlohmann::json(g.exit_lower_bound)
                                                                   : nlohmann::json("inf")},
            {"graph_nodes", g.graph_nodes},
            {"nodes_expanded", g.nodes_expanded},
            {"long_edges", g.long_edges},
            {"rounds", g.rounds},
            {"tie_enumeration_truncated", g.tie_enumeration_truncated}}}};
}

}  // namespace fpp
