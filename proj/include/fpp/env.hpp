#pragma once

#include "fpp/rng.hpp"
#include "fpp/types.hpp"

#include "json.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace fpp {

class ShearMap;

/// Closed axis-aligned box standing in for R^d.
struct Window {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  double volume() const;
  bool contains(const Vec& x) const;
  /// True when the closed ball B(c, r) lies inside the window.
  bool contains_ball(const Vec& c, double r) const;
  Window inflated(double margin) const;
  Window translated(const Vec& y) const;

  static Window cube(int d, double lo, double hi);
  static Window centered(const Vec& center, double half_width);
};

/// Throws InvalidArgument unless d in {2,3} and upper > lower componentwise.
void validate(const Window& w);

/// Uniform grid of unit cells with per-cell sorted point lists (CSR layout).
class GridIndex {
 public:
  GridIndex() = default;
  GridIndex(const Window& w, std::span<const Vec> points);

  /// Calls fn(index) for every point whose cell meets the box [lo, hi].
  template <class Fn>
  void for_each_in_box(const Vec& lo, const Vec& hi, Fn&& fn) const;

  /// Indices of the points stored in x's cell (empty if outside the grid).
  std::span<const std::uint32_t> cell_of(const Vec& x) const;

 private:
  long flat(const std::array<long, 3>& c) const;
  bool cell_coords(const Vec& x, std::array<long, 3>& c) const;

  int dim_ = 0;
  std::array<long, 3> origin_{0, 0, 0};
  std::array<long, 3> extent_{1, 1, 1};
  std::vector<std::uint32_t> start_;
  std::vector<std::uint32_t> items_;
};

/// Immutable Poisson point configuration; the role of omega.
///
/// Points are sorted lexicographically and pairwise distinct. `complete`
/// marks hand-built configurations that are the whole environment (nothing
/// exists outside the window); sampled configurations are truncations of an
/// infinite process and are not complete.
class PointConfiguration {
 public:
  PointConfiguration() = default;
  PointConfiguration(Window window, std::uint64_t seed, std::vector<Vec> points,
                     bool complete);

  /// Hand-built, complete configuration. The window defaults to the bounding
  /// box of the points inflated by 1 (or [-1,1]^d when empty).
  static PointConfiguration from_points(int d, std::vector<Vec> points);
  static PointConfiguration from_points(Window window, std::vector<Vec> points);

  const Window& window() const { return window_; }
  std::uint64_t seed() const { return seed_; }
  int dim() const { return window_.dim(); }
  bool complete() const { return complete_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  std::span<const Vec> points() const { return points_; }
  const Vec& operator[](std::size_t i) const { return points_[i]; }

  /// F(x) == 0 test: exact coordinate equality against a stored point.
  bool contains_point(const Vec& x) const;
  /// Index of the stored point equal to x, or -1.
  long find(const Vec& x) const;

  /// Calls fn(index) for every point p with |p - c| <= r.
  template <class Fn>
  void for_each_in_ball(const Vec& c, double r, Fn&& fn) const {
    Vec lo = c.array() - r;
    Vec hi = c.array() + r;
    const double r2 = r * r;
    index_.for_each_in_box(lo, hi, [&](std::uint32_t i) {
      if ((points_[i] - c).squaredNorm() <= r2) fn(static_cast<std::size_t>(i));
    });
  }

 private:
  Window window_;
  std::uint64_t seed_ = 0;
  bool complete_ = false;
  std::vector<Vec> points_;
  GridIndex index_;
};

/// Bounded random positive semidefinite amplitude with a compactly supported
/// bump profile; one mark per Poisson point of the Riemannian models.
struct KernelSpec {
  double radius = 1.0;
  Mat amplitude;
};

/// Law of the i.i.d. marks: amplitude * A A^T / d with A_ij ~ U[-1, 1].
struct MarkLaw {
  double radius = 1.0;
  double amplitude = 1.0;
};

struct MarkedConfiguration {
  PointConfiguration config;
  std::vector<KernelSpec> marks;

  /// Sorts (point, mark) pairs jointly; validates sizes.
  static MarkedConfiguration make(Window window, std::uint64_t seed, std::vector<Vec> points,
                                  std::vector<KernelSpec> marks, bool complete);
};

// ---- operations -------------------------------------------------------------

/// Homogeneous Poisson sample: count by inversion, then i.i.d. uniform
/// positions. Identical (window, seed, intensity) gives bit-identical output.
PointConfiguration sample_points(const Window& window, std::uint64_t seed,
                                 double intensity = 1.0);

MarkedConfiguration sample_marked(const Window& window, std::uint64_t seed, const MarkLaw& law,
                                  double intensity = 1.0);

template <class G>
KernelSpec draw_mark(G& eng, int d, const MarkLaw& law) {
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = uniform(eng, -1.0, 1.0);
  Mat m = law.amplitude * (a * a.transpose()) / static_cast<double>(d);
  m = 0.5 * (m + m.transpose());
  return KernelSpec{law.radius, m};
}

/// Cell-consistent Poisson sample: every unit cell k + [0,1)^d draws its own
/// points from a stream keyed by (seed, k). The window must have integer
/// bounds; the sample on a larger window restricted to a smaller one equals
/// the sample on the smaller one, so solves can be retried on a grown
/// window without changing the environment.
PointConfiguration sample_points_cellwise(const Window& window, std::uint64_t seed,
                                          double intensity = 1.0);
MarkedConfiguration sample_marked_cellwise(const Window& window, std::uint64_t seed,
                                           const MarkLaw& law, double intensity = 1.0);

inline bool is_poisson_point(const PointConfiguration& c, const Vec& x) {
  return c.contains_point(x);
}

/// theta^y: translate every point (and the window) by y.
PointConfiguration shift(const PointConfiguration& c, const Vec& y);

/// Apply the shear map to every point; the window becomes the bounding box
/// of the image of the old window.
PointConfiguration shear_pushforward(const PointConfiguration& c, const ShearMap& map);
MarkedConfiguration shear_pushforward(const MarkedConfiguration& c, const ShearMap& map);

/// Pushforward restricted to `target`, which must be fully sampled: the
/// preimage of every target corner has to lie in c's window. The bounding
/// box above also covers regions that were never sampled, so solvers that
/// need a faithful window use this form.
PointConfiguration shear_pushforward(const PointConfiguration& c, const ShearMap& map,
                                     const Window& target);
MarkedConfiguration shear_pushforward(const MarkedConfiguration& c, const ShearMap& map,
                                      const Window& target);

/// Points in the half-open box [lo, hi).
std::size_t count_in(const PointConfiguration& c, const Vec& lo, const Vec& hi);

// ---- serialization ----------------------------------------------------------

nlohmann::json to_json(const Window& w);
Window window_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PointConfiguration& c);
nlohmann::json to_json(const MarkedConfiguration& c);
nlohmann::json to_json(const KernelSpec& k);
PointConfiguration config_from_json(const nlohmann::json& j);
MarkedConfiguration marked_from_json(const nlohmann::json& j);

// ---- template implementation ------------------------------------------------

template <class Fn>
void GridIndex::for_each_in_box(const Vec& lo, const Vec& hi, Fn&& fn) const {
  if (dim_ == 0 || items_.empty()) return;
  std::array<long, 3> a{0, 0, 0}, b{0, 0, 0};
  for (int k = 0; k < dim_; ++k) {
    const double l = std::floor(lo(k)) - static_cast<double>(origin_[k]);
    const double h = std::floor(hi(k)) - static_cast<double>(origin_[k]);
    if (h < 0 || l > static_cast<double>(extent_[k] - 1)) return;
    a[k] = l < 0 ? 0 : static_cast<long>(l);
    b[k] = h > static_cast<double>(extent_[k] - 1) ? extent_[k] - 1 : static_cast<long>(h);
  }
  std::array<long, 3> c{0, 0, 0};
  for (c[2] = a[2]; c[2] <= b[2]; ++c[2])
    for (c[1] = a[1]; c[1] <= b[1]; ++c[1])
      for (c[0] = a[0]; c[0] <= b[0]; ++c[0]) {
        const long f = flat(c);
        for (std::uint32_t s = start_[f]; s < start_[f + 1]; ++s) fn(items_[s]);
      }
}

}  // namespace fpp
