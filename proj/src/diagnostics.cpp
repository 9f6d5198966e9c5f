#include "fpp/diagnostics.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace fpp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- exact orientation -------------------------------------------------------------

using BigInt = boost::multiprecision::cpp_int;

// x = mantissa * 2^exponent with an integer mantissa (x finite).
std::pair<std::int64_t, int> split(double x) {
  if (x == 0.0) return {0, 0};
  int e = 0;
  const double f = std::frexp(x, &e);
  return {static_cast<std::int64_t>(std::ldexp(f, 53)), e - 53};
}

int exact_orient(const std::array<double, 6>& xs) {
  std::array<std::pair<std::int64_t, int>, 6> parts;
  int emin = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < 6; ++i) {
    parts[i] = split(xs[i]);
    if (parts[i].first != 0) emin = std::min(emin, parts[i].second);
  }
  std::array<BigInt, 6> v;
  for (std::size_t i = 0; i < 6; ++i) {
    v[i] = parts[i].first;
    if (parts[i].first != 0) v[i] <<= static_cast<unsigned>(parts[i].second - emin);
  }
  // xs = (ax, ay, bx, by, cx, cy)
  const BigInt det = (v[2] - v[0]) * (v[5] - v[1]) - (v[3] - v[1]) * (v[4] - v[0]);
  return det > 0 ? 1 : (det < 0 ? -1 : 0);
}

int orient2(double ax, double ay, double bx, double by, double cx, double cy) {
  const double l = (bx - ax) * (cy - ay), r = (by - ay) * (cx - ax);
  const double det = l - r;
  // Floating filter; the bound covers the rounding of the differences too.
  const double bound = 3.3306690738754716e-16 * (std::abs(l) + std::abs(r));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return exact_orient({ax, ay, bx, by, cx, cy});
}

// ---- lattice animals --------------------------------------------------------------------

struct Lattice {
  int d;
  long reach;  // cells with |k_i| <= reach
  long side;
  std::vector<double> x;
  std::vector<Cell> nb;

  Lattice(const CellField& field, int d_, long reach_) : d(d_), reach(reach_), side(2 * reach_ + 1) {
    const long total = d == 2 ? side * side : side * side * side;
    x.resize(static_cast<std::size_t>(total));
    for (long i = 0; i < total; ++i) x[static_cast<std::size_t>(i)] = field(cell(i));
    for (long dz = (d == 3 ? -1 : 0); dz <= (d == 3 ? 1 : 0); ++dz)
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx)
          if (dx != 0 || dy != 0 || dz != 0) nb.push_back({dx, dy, dz});
  }
  long index(const Cell& c) const {
    long i = 0;
    for (int k = d - 1; k >= 0; --k) i = i * side + (c[static_cast<std::size_t>(k)] + reach);
    return i;
  }
  Cell cell(long i) const {
    Cell c{0, 0, 0};
    for (int k = 0; k < d; ++k) {
      c[static_cast<std::size_t>(k)] = i % side - reach;
      i /= side;
    }
    return c;
  }
  bool inside(const Cell& c) const {
    for (int k = 0; k < d; ++k)
      if (std::abs(c[static_cast<std::size_t>(k)]) > reach) return false;
    return true;
  }
};

void check_animal_args(int d, int n_max) {
  if (d != 2 && d != 3) throw InvalidArgument("lattice animals: d must be 2 or 3");
  if (n_max < 1 || n_max > (d == 2 ? 8 : 5))
    throw InvalidArgument("lattice animals: n_max must lie in [1, 8] (2D) or [1, 5] (3D)");
}

AnimalReport finish_report(int d, int n_max, const std::vector<double>& best, const std::vector<std::uint64_t>& sets) {
  AnimalReport r;
  r.d = d;
  for (int n = 1; n <= n_max; ++n) {
    r.n.push_back(n);
    r.max.push_back(best[static_cast<std::size_t>(n)]);
    r.ratio.push_back(best[static_cast<std::size_t>(n)] / n);
    r.sets.push_back(sets[static_cast<std::size_t>(n)]);
  }
  return r;
}

}  // namespace

// ---- metric axioms -------------------------------------------------------------------

MetricAxiomReport metric_axiom_suite(const Model& m, const Environment& env, int n_triples, double spread,
                                     std::uint64_t seed, double triangle_tol) {
  const int d = model_dim(m);
  Engine eng(seed);
  auto draw = [&]() {
    Vec p(d);
    for (int k = 0; k < d; ++k) p(k) = uniform(eng, -spread, spread);
    return p;
  };
  MetricAxiomReport r;
  r.triangle_tol = triangle_tol;
  r.positivity_min = kInf;
  r.triangle_max_excess = -kInf;
  for (int i = 0; i < n_triples; ++i) {
    const Vec x = draw(), y = draw(), z = draw();
    const double xy = min_action(m, env, x, y), yx = min_action(m, env, y, x);
    const double yz = min_action(m, env, y, z), zy = min_action(m, env, z, y);
    const double xz = min_action(m, env, x, z), zx = min_action(m, env, z, x);
    r.symmetry_max = std::max({r.symmetry_max, std::abs(xy - yx), std::abs(yz - zy), std::abs(xz - zx)});
    r.triangle_max_excess = std::max({r.triangle_max_excess, xz - (xy + yz), xy - (xz + zy), yz - (yx + xz)});
    r.positivity_min = std::min({r.positivity_min, xy, yz, xz});
    for (const Vec* p : {&x, &y, &z}) r.identity_max = std::max(r.identity_max, std::abs(min_action(m, env, *p, *p)));
    // Triple x = y = z: every side is A(x, x).
    const double xx = min_action(m, env, x, x);
    r.degenerate_max = std::max({r.degenerate_max, std::abs(xx), xx - (xx + xx)});
    ++r.triples;
  }
  r.pass = r.triples > 0 && r.symmetry_max == 0.0 && r.positivity_min > 0.0 && r.identity_max == 0.0 &&
           r.degenerate_max == 0.0 && r.triangle_max_excess <= triangle_tol;
  return r;
}

// ---- collinearity ------------------------------------------------------------------------

int orientation_exact(const Vec& a, const Vec& b, const Vec& c) {
  if (a.size() != 2 || b.size() != 2 || c.size() != 2) throw InvalidArgument("orientation: 2D points only");
  return orient2(a(0), a(1), b(0), b(1), c(0), c(1));
}

bool collinear(const Vec& a, const Vec& b, const Vec& c, double tol) {
  const int d = static_cast<int>(a.size());
  if (b.size() != d || c.size() != d || (d != 2 && d != 3)) throw InvalidArgument("collinear: 2D or 3D points");
  if (tol > 0.0) {
    const Vec u = b - a, w = c - a;
    if (d == 2) return std::abs(u(0) * w(1) - u(1) * w(0)) <= tol;
    return u.head<3>().cross(w.head<3>()).norm() <= tol;
  }
  if (d == 2) return orient2(a(0), a(1), b(0), b(1), c(0), c(1)) == 0;
  // In 3D the cross product vanishes iff every coordinate-plane projection is degenerate.
  return orient2(a(0), a(1), b(0), b(1), c(0), c(1)) == 0 && orient2(a(1), a(2), b(1), b(2), c(1), c(2)) == 0 &&
         orient2(a(0), a(2), b(0), b(2), c(0), c(2)) == 0;
}

std::vector<std::array<std::size_t, 3>> collinear_triples(const PointConfiguration& c, double tol) {
  if (c.size() > 200) throw InvalidArgument("collinear_triples: at most 200 points");
  std::vector<std::array<std::size_t, 3>> out;
  const std::size_t n = c.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        if (collinear(c[i], c[j], c[k], tol)) out.push_back({i, j, k});
  return out;
}

// ---- greedy lattice animals --------------------------------------------------------------

AnimalReport lattice_animal_max(const CellField& field, int d, int n_max) {
  check_animal_args(d, n_max);
  const Lattice lat(field, d, n_max);
  std::vector<std::uint8_t> marked(lat.x.size(), 0);
  std::vector<double> best(static_cast<std::size_t>(n_max) + 1, -kInf);
  std::vector<std::uint64_t> sets(static_cast<std::size_t>(n_max) + 1, 0);
  // Redelmeier's scheme without the translation restriction: every
  // *-connected set containing the origin is visited exactly once.
  std::vector<long> untried{lat.index({0, 0, 0})};
  marked[static_cast<std::size_t>(untried[0])] = 1;
  auto rec = [&](auto&& self, std::vector<long> pool, int size, double sum) -> void {
    while (!pool.empty()) {
      const long c = pool.back();
      pool.pop_back();
      const int ns = size + 1;
      const double s = sum + lat.x[static_cast<std::size_t>(c)];
      best[static_cast<std::size_t>(ns)] = std::max(best[static_cast<std::size_t>(ns)], s);
      ++sets[static_cast<std::size_t>(ns)];
      if (ns < n_max) {
        std::vector<long> added;
        const Cell cc = lat.cell(c);
        for (const Cell& o : lat.nb) {
          const Cell q{cc[0] + o[0], cc[1] + o[1], cc[2] + o[2]};
          if (!lat.inside(q)) continue;
          const long qi = lat.index(q);
          if (marked[static_cast<std::size_t>(qi)]) continue;
          marked[static_cast<std::size_t>(qi)] = 1;
          added.push_back(qi);
        }
        std::vector<long> next = pool;
        next.insert(next.end(), added.begin(), added.end());
        self(self, std::move(next), ns, s);
        for (long qi : added) marked[static_cast<std::size_t>(qi)] = 0;
      }
    }
  };
  rec(rec, untried, 0, 0.0);
  return finish_report(d, n_max, best, sets);
}

AnimalReport lattice_animal_max_bfs(const CellField& field, int d, int n_max) {
  check_animal_args(d, n_max);
  const Lattice lat(field, d, n_max);
  std::vector<double> best(static_cast<std::size_t>(n_max) + 1, -kInf);
  std::vector<std::uint64_t> sets(static_cast<std::size_t>(n_max) + 1, 0);
  std::set<std::vector<long>> level{{lat.index({0, 0, 0})}};
  for (int n = 1; n <= n_max; ++n) {
    for (const auto& s : level) {
      double sum = 0.0;
      for (long i : s) sum += lat.x[static_cast<std::size_t>(i)];
      best[static_cast<std::size_t>(n)] = std::max(best[static_cast<std::size_t>(n)], sum);
    }
    sets[static_cast<std::size_t>(n)] = level.size();
    if (n == n_max) break;
    std::set<std::vector<long>> next;
    for (const auto& s : level)
      for (long i : s) {
        const Cell cc = lat.cell(i);
        for (const Cell& o : lat.nb) {
          const Cell q{cc[0] + o[0], cc[1] + o[1], cc[2] + o[2]};
          if (!lat.inside(q)) continue;
          const long qi = lat.index(q);
          if (std::binary_search(s.begin(), s.end(), qi)) continue;
          std::vector<long> t = s;
          t.insert(std::upper_bound(t.begin(), t.end(), qi), qi);
          next.insert(std::move(t));
        }
      }
    level = std::move(next);
  }
  return finish_report(d, n_max, best, sets);
}

CellField poisson_count_field(const PointConfiguration& c) {
  return [c](const Cell& k) {
    const int d = c.dim();
    Vec lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
      lo(i) = static_cast<double>(k[static_cast<std::size_t>(i)]);
      hi(i) = lo(i) + 1.0;
    }
    if (!c.window().contains(lo) || !c.window().contains(hi))
      throw InvalidArgument("poisson_count_field: cell outside the sampled window");
    return static_cast<double>(count_in(c, lo, hi));
  };
}

bool animal_ratio_bounded(const AnimalReport& r, double factor) {
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < r.n.size(); ++i) {
    double& slot = r.n[i] <= 4 ? head : tail;
    slot = std::max(slot, r.ratio[i]);
  }
  return std::isfinite(tail) && tail <= factor * head;
}

// ---- localization ---------------------------------------------------------------------

LocalizationReport localization_audit(const PointConfiguration& env, const BrokenLineCost& cost,
                                      const std::vector<std::pair<Vec, Vec>>& pairs, const GeodesicOptions& opts) {
  LocalizationReport r;
  r.pass = true;
  for (const auto& [x, y] : pairs) {
    LocalizationEntry e;
    e.x = x;
    e.y = y;
    try {
      const auto g = geodesic(env, cost, x, y, opts);
      e.action = g.action;
      e.radius = g.localization_radius;
      e.certified = g.certified;
    } catch (const SolverError&) {
      e.certified = false;
    }
    if (e.certified) {
      GeodesicOptions wide = opts;
      wide.min_radius = 1.5 * e.radius;
      try {
        const auto g2 = geodesic(env, cost, x, y, wide);
        e.resolved = true;
        e.resolved_action = g2.action;
        e.difference = std::abs(g2.action - e.action);
        e.pass = e.difference <= 1e-12;
      } catch (const SolverError&) {
        e.resolved = false;
      }
    }
    r.pass = r.pass && e.pass;
    r.entries.push_back(e);
  }
  return r;
}

// ---- serialization --------------------------------------------------------------------

nlohmann::json to_json(const MetricAxiomReport& r) {
  return {{"check", "metric_axioms"},
          {"triples", r.triples},
          {"symmetry_max", r.symmetry_max},
          {"triangle_max_excess", r.triangle_max_excess},
          {"triangle_tol", r.triangle_tol},
          {"positivity_min", r.positivity_min},
          {"identity_max", r.identity_max},
          {"degenerate_max", r.degenerate_max},
          {"pass", r.pass}};
}

nlohmann::json to_json(const AnimalReport& r) {
  return {{"d", r.d}, {"n", r.n}, {"max", r.max}, {"ratio", r.ratio}, {"sets", r.sets}};
}

nlohmann::json to_json(const LocalizationReport& r) {
  nlohmann::json en = nlohmann::json::array();
  for (const auto& e : r.entries) {
    nlohmann::json x = nlohmann::json::array(), y = nlohmann::json::array();
    for (int k = 0; k < e.x.size(); ++k) {
      x.push_back(e.x(k));
      y.push_back(e.y(k));
    }
    en.push_back({{"x", x},
                  {"y", y},
                  {"action", e.action},
                  {"radius", e.radius},
                  {"certified", e.certified},
                  {"resolved", e.resolved},
                  {"resolved_action", e.resolved_action},
                  {"difference", e.difference},
                  {"pass", e.pass}});
  }
  return {{"check", "localization_audit"}, {"pass", r.pass}, {"entries", en}};
}

}  // namespace fpp
