#include "fpp/env.hpp"

#include "fpp/shear_map.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace fpp {

// ---- Window -------------------------------------------------------------------

double Window::volume() const {
  double v = 1.0;
  for (int k = 0; k < dim(); ++k) v *= upper(k) - lower(k);
  return v;
}

bool Window::contains(const Vec& x) const {
  if (x.size() != lower.size()) return false;
  for (int k = 0; k < dim(); ++k)
    if (!(x(k) >= lower(k) && x(k) <= upper(k))) return false;
  return true;
}

bool Window::contains_ball(const Vec& c, double r) const {
  for (int k = 0; k < dim(); ++k)
    if (c(k) - r < lower(k) || c(k) + r > upper(k)) return false;
  return true;
}

Window Window::inflated(double margin) const {
  return Window{lower.array() - margin, upper.array() + margin};
}

Window Window::translated(const Vec& y) const { return Window{lower + y, upper + y}; }

Window Window::cube(int d, double lo, double hi) {
  return Window{Vec::Constant(d, lo), Vec::Constant(d, hi)};
}

Window Window::centered(const Vec& center, double half_width) {
  return Window{center.array() - half_width, center.array() + half_width};
}

void validate(const Window& w) {
  const int d = w.dim();
  if (d < 2 || d > kMaxDim) throw InvalidArgument("window dimension must be 2 or 3");
  if (w.upper.size() != d) throw InvalidArgument("window corners disagree in dimension");
  for (int k = 0; k < d; ++k) {
    if (!std::isfinite(w.lower(k)) || !std::isfinite(w.upper(k)))
      throw InvalidArgument("window corners must be finite");
    if (!(w.upper(k) > w.lower(k))) throw InvalidArgument("window upper must exceed lower");
  }
}

// ---- GridIndex ----------------------------------------------------------------

GridIndex::GridIndex(const Window& w, std::span<const Vec> points) : dim_(w.dim()) {
  long cells = 1;
  for (int k = 0; k < dim_; ++k) {
    origin_[k] = static_cast<long>(std::floor(w.lower(k)));
    extent_[k] = static_cast<long>(std::floor(w.upper(k))) - origin_[k] + 1;
    cells *= extent_[k];
  }
  if (cells > 200'000'000L) throw InvalidArgument("window too large for the spatial index");
  start_.assign(static_cast<std::size_t>(cells) + 1, 0);
  std::vector<long> cell_of_point(points.size());
  std::array<long, 3> c{0, 0, 0};
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!cell_coords(points[i], c)) throw InvalidArgument("point outside the index window");
    cell_of_point[i] = flat(c);
    ++start_[static_cast<std::size_t>(cell_of_point[i]) + 1];
  }
  std::partial_sum(start_.begin(), start_.end(), start_.begin());
  items_.resize(points.size());
  std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
  // Points arrive sorted, so each cell list stays sorted.
  for (std::size_t i = 0; i < points.size(); ++i)
    items_[fill[static_cast<std::size_t>(cell_of_point[i])]++] = static_cast<std::uint32_t>(i);
}

long GridIndex::flat(const std::array<long, 3>& c) const {
  return c[0] + extent_[0] * (c[1] + extent_[1] * c[2]);
}

bool GridIndex::cell_coords(const Vec& x, std::array<long, 3>& c) const {
  c = {0, 0, 0};
  for (int k = 0; k < dim_; ++k) {
    const double f = std::floor(x(k)) - static_cast<double>(origin_[k]);
    if (!(f >= 0.0) || f > static_cast<double>(extent_[k] - 1)) return false;
    c[k] = static_cast<long>(f);
  }
  return true;
}

std::span<const std::uint32_t> GridIndex::cell_of(const Vec& x) const {
  std::array<long, 3> c{0, 0, 0};
  if (dim_ == 0 || x.size() != dim_ || !cell_coords(x, c)) return {};
  const long f = flat(c);
  return {items_.data() + start_[f], items_.data() + start_[f + 1]};
}

// ---- PointConfiguration -----------------------------------------------------------

PointConfiguration::PointConfiguration(Window window, std::uint64_t seed, std::vector<Vec> points,
                                       bool complete)
    : window_(std::move(window)), seed_(seed), complete_(complete), points_(std::move(points)) {
  validate(window_);
  for (const Vec& p : points_) {
    if (p.size() != window_.dim()) throw InvalidArgument("point dimension mismatch");
    if (!window_.contains(p)) throw InvalidArgument("point outside window");
  }
  std::sort(points_.begin(), points_.end(), lex_less);
  for (std::size_t i = 1; i < points_.size(); ++i)
    if (bit_equal(points_[i - 1], points_[i]))
      throw InvalidArgument("configuration points must be pairwise distinct");
  index_ = GridIndex(window_, points_);
}

PointConfiguration PointConfiguration::from_points(int d, std::vector<Vec> points) {
  Window w = Window::cube(d, -1.0, 1.0);
  if (!points.empty()) {
    w.lower = points.front();
    w.upper = points.front();
    for (const Vec& p : points) {
      w.lower = w.lower.cwiseMin(p);
      w.upper = w.upper.cwiseMax(p);
    }
    w = w.inflated(1.0);
  }
  return PointConfiguration(std::move(w), 0, std::move(points), true);
}

PointConfiguration PointConfiguration::from_points(Window window, std::vector<Vec> points) {
  return PointConfiguration(std::move(window), 0, std::move(points), true);
}

long PointConfiguration::find(const Vec& x) const {
  for (std::uint32_t i : index_.cell_of(x))
    if (bit_equal(points_[i], x)) return static_cast<long>(i);
  return -1;
}

bool PointConfiguration::contains_point(const Vec& x) const { return find(x) >= 0; }

MarkedConfiguration MarkedConfiguration::make(Window window, std::uint64_t seed,
                                              std::vector<Vec> points,
                                              std::vector<KernelSpec> marks, bool complete) {
  if (points.size() != marks.size()) throw InvalidArgument("mark count must equal point count");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return lex_less(points[a], points[b]); });
  std::vector<Vec> sp;
  std::vector<KernelSpec> sm;
  sp.reserve(points.size());
  sm.reserve(points.size());
  for (std::size_t i : order) {
    sp.push_back(std::move(points[i]));
    sm.push_back(std::move(marks[i]));
  }
  MarkedConfiguration out;
  out.config = PointConfiguration(std::move(window), seed, std::move(sp), complete);
  out.marks = std::move(sm);
  return out;
}

// ---- sampling -------------------------------------------------------------------

PointConfiguration sample_points(const Window& window, std::uint64_t seed, double intensity) {
  validate(window);
  if (!(intensity >= 0.0) || !std::isfinite(intensity))
    throw InvalidArgument("intensity must be finite and nonnegative");
  const double mass = window.volume() * intensity;
  if (!std::isfinite(mass) || mass > 5e7) throw InvalidArgument("window volume overflow");
  Engine eng(seed);
  const std::uint64_t n = poisson_inversion(eng, mass);
  std::vector<Vec> pts;
  pts.reserve(n);
  const int d = window.dim();
  for (std::uint64_t i = 0; i < n; ++i) {
    Vec p(d);
    for (int k = 0; k < d; ++k) p(k) = uniform(eng, window.lower(k), window.upper(k));
    pts.push_back(p);
  }
  std::sort(pts.begin(), pts.end(), lex_less);
  // Coincident draws have probability zero; drop them rather than fail.
  pts.erase(std::unique(pts.begin(), pts.end(), bit_equal), pts.end());
  return PointConfiguration(window, seed, std::move(pts), false);
}


MarkedConfiguration sample_marked(const Window& window, std::uint64_t seed, const MarkLaw& law,
                                  double intensity) {
  if (!(law.radius > 0.0) || !(law.amplitude >= 0.0))
    throw InvalidArgument("mark law needs radius > 0 and amplitude >= 0");
  PointConfiguration pts = sample_points(window, seed, intensity);
  Engine eng(derive_seed(seed, 0x6d61726bULL));
  std::vector<KernelSpec> marks;
  marks.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) marks.push_back(draw_mark(eng, window.dim(), law));
  MarkedConfiguration out;
  out.config = std::move(pts);
  out.marks = std::move(marks);
  return out;
}

namespace {

std::uint64_t cell_key(std::uint64_t seed, const std::array<long, 3>& c) {
  std::uint64_t h = mix64(seed);
  for (long x : c) h = mix64(h ^ static_cast<std::uint64_t>(x));
  return h;
}

template <class Fn>
void for_each_cell(const Window& w, std::uint64_t seed, double intensity, Fn&& fn) {
  validate(w);
  if (!(intensity >= 0.0) || !std::isfinite(intensity))
    throw InvalidArgument("intensity must be finite and nonnegative");
  const int d = w.dim();
  std::array<long, 3> lo{0, 0, 0}, hi{1, 1, 1};
  for (int k = 0; k < d; ++k) {
    if (w.lower(k) != std::floor(w.lower(k)) || w.upper(k) != std::floor(w.upper(k)))
      throw InvalidArgument("cellwise sampling needs integer window bounds");
    lo[static_cast<std::size_t>(k)] = static_cast<long>(w.lower(k));
    hi[static_cast<std::size_t>(k)] = static_cast<long>(w.upper(k));
  }
  if (w.volume() * intensity > 5e7) throw InvalidArgument("window volume overflow");
  std::array<long, 3> c{0, 0, 0};
  for (c[2] = lo[2]; c[2] < hi[2]; ++c[2])
    for (c[1] = lo[1]; c[1] < hi[1]; ++c[1])
      for (c[0] = lo[0]; c[0] < hi[0]; ++c[0]) {
        SplitMix64 eng(cell_key(seed, c));
        const std::uint64_t n = poisson_inversion(eng, intensity);
        for (std::uint64_t i = 0; i < n; ++i) {
          Vec p(d);
          for (int k = 0; k < d; ++k) {
            const double base = static_cast<double>(c[static_cast<std::size_t>(k)]);
            p(k) = std::min(uniform(eng, base, base + 1.0), std::nextafter(base + 1.0, base));
          }
          fn(p, eng);
        }
      }
}

}  // namespace

PointConfiguration sample_points_cellwise(const Window& window, std::uint64_t seed, double intensity) {
  std::vector<Vec> pts;
  for_each_cell(window, seed, intensity, [&](const Vec& p, SplitMix64&) { pts.push_back(p); });
  std::sort(pts.begin(), pts.end(), lex_less);
  pts.erase(std::unique(pts.begin(), pts.end(), bit_equal), pts.end());
  return PointConfiguration(window, seed, std::move(pts), false);
}

MarkedConfiguration sample_marked_cellwise(const Window& window, std::uint64_t seed, const MarkLaw& law,
                                           double intensity) {
  if (!(law.radius > 0.0) || !(law.amplitude >= 0.0))
    throw InvalidArgument("mark law needs radius > 0 and amplitude >= 0");
  std::vector<Vec> pts;
  std::vector<KernelSpec> marks;
  // The mark is drawn from the cell stream right after its point.
  for_each_cell(window, seed, intensity, [&](const Vec& p, SplitMix64& eng) {
    pts.push_back(p);
    marks.push_back(draw_mark(eng, window.dim(), law));
  });
  return MarkedConfiguration::make(window, seed, std::move(pts), std::move(marks), false);
}

// ---- transformations ---------------------------------------------------------------

PointConfiguration shift(const PointConfiguration& c, const Vec& y) {
  std::vector<Vec> pts;
  pts.reserve(c.size());
  for (const Vec& p : c.points()) pts.push_back(p + y);
  return PointConfiguration(c.window().translated(y), c.seed(), std::move(pts), c.complete());
}

namespace {

Window image_bbox(const Window& w, const ShearMap& map) {
  const int d = w.dim();
  Window out{Vec::Constant(d, std::numeric_limits<double>::infinity()),
             Vec::Constant(d, -std::numeric_limits<double>::infinity())};
  for (int mask = 0; mask < (1 << d); ++mask) {
    Vec corner(d);
    for (int k = 0; k < d; ++k) corner(k) = (mask >> k) & 1 ? w.upper(k) : w.lower(k);
    const Vec img = map.apply(corner);
    out.lower = out.lower.cwiseMin(img);
    out.upper = out.upper.cwiseMax(img);
  }
  return out;
}

void expand_to_fit(Window& w, const std::vector<Vec>& pts) {
  for (const Vec& p : pts) {
    w.lower = w.lower.cwiseMin(p);
    w.upper = w.upper.cwiseMax(p);
  }
}

}  // namespace

PointConfiguration shear_pushforward(const PointConfiguration& c, const ShearMap& map) {
  std::vector<Vec> pts;
  pts.reserve(c.size());
  for (const Vec& p : c.points()) pts.push_back(map.apply(p));
  Window w = image_bbox(c.window(), map);
  expand_to_fit(w, pts);  // guards against last-ulp rounding at the corners
  return PointConfiguration(std::move(w), c.seed(), std::move(pts), c.complete());
}

MarkedConfiguration shear_pushforward(const MarkedConfiguration& c, const ShearMap& map) {
  std::vector<Vec> pts;
  pts.reserve(c.config.size());
  for (const Vec& p : c.config.points()) pts.push_back(map.apply(p));
  Window w = image_bbox(c.config.window(), map);
  expand_to_fit(w, pts);
  return MarkedConfiguration::make(std::move(w), c.config.seed(), std::move(pts), c.marks,
                                   c.config.complete());
}

namespace {

void check_preimage(const Window& source, const ShearMap& map, const Window& target) {
  validate(target);
  const int d = target.dim();
  for (int mask = 0; mask < (1 << d); ++mask) {
    Vec corner(d);
    for (int k = 0; k < d; ++k) corner(k) = (mask >> k) & 1 ? target.upper(k) : target.lower(k);
    if (!source.contains(map.inverse_apply(corner)))
      throw InvalidArgument("shear_pushforward: target window is not covered by the sampled window");
  }
}

bool inside(const Window& w, const Vec& p) { return w.contains(p); }

}  // namespace

PointConfiguration shear_pushforward(const PointConfiguration& c, const ShearMap& map,
                                     const Window& target) {
  check_preimage(c.window(), map, target);
  std::vector<Vec> pts;
  for (const Vec& p : c.points()) {
    Vec q = map.apply(p);
    if (inside(target, q)) pts.push_back(std::move(q));
  }
  return PointConfiguration(target, c.seed(), std::move(pts), c.complete());
}

MarkedConfiguration shear_pushforward(const MarkedConfiguration& c, const ShearMap& map,
                                      const Window& target) {
  check_preimage(c.config.window(), map, target);
  std::vector<Vec> pts;
  std::vector<KernelSpec> marks;
  for (std::size_t i = 0; i < c.config.size(); ++i) {
    Vec q = map.apply(c.config[i]);
    if (inside(target, q)) {
      pts.push_back(std::move(q));
      marks.push_back(c.marks[i]);
    }
  }
  return MarkedConfiguration::make(target, c.config.seed(), std::move(pts), std::move(marks),
                                   c.config.complete());
}

std::size_t count_in(const PointConfiguration& c, const Vec& lo, const Vec& hi) {
  std::size_t n = 0;
  const int d = c.dim();
  for (const Vec& p : c.points()) {
    bool in = true;
    for (int k = 0; k < d && in; ++k) in = p(k) >= lo(k) && p(k) < hi(k);
    n += in ? 1 : 0;
  }
  return n;
}

// ---- serialization ------------------------------------------------------------------

namespace {

nlohmann::json vec_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

Vec vec_from(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || j.size() > kMaxDim) throw InvalidArgument("bad vector in JSON");
  Vec v(static_cast<int>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<int>(k)) = j[k].get<double>();
  return v;
}

nlohmann::json mat_json(const Mat& m) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

Mat mat_from(const nlohmann::json& j, int d) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) throw InvalidArgument("bad matrix in JSON");
  Mat m(d, d);
  for (int i = 0; i < d; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != d) throw InvalidArgument("bad matrix row");
    for (int k = 0; k < d; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const Window& w) { return nlohmann::json::array({vec_json(w.lower), vec_json(w.upper)}); }

Window window_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("window must be [[lower],[upper]]");
  Window w{vec_from(j[0]), vec_from(j[1])};
  validate(w);
  return w;
}

nlohmann::json to_json(const KernelSpec& k) {
  return {{"radius", k.radius}, {"amplitude", mat_json(k.amplitude)}};
}

nlohmann::json to_json(const PointConfiguration& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (const Vec& p : c.points()) pts.push_back(vec_json(p));
  return {{"d", c.dim()}, {"window", to_json(c.window())}, {"seed", c.seed()},
          {"complete", c.complete()}, {"points", pts}};
}

nlohmann::json to_json(const MarkedConfiguration& c) {
  nlohmann::json j = to_json(c.config);
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t i = 0; i < c.config.size(); ++i)
    pts.push_back({{"x", vec_json(c.config[i])}, {"mark", to_json(c.marks[i])}});
  j["points"] = pts;
  return j;
}

PointConfiguration config_from_json(const nlohmann::json& j) {
  const int d = j.at("d").get<int>();
  Window w = window_from_json(j.at("window"));
  if (w.dim() != d) throw InvalidArgument("window dimension disagrees with d");
  std::vector<Vec> pts;
  for (const auto& p : j.at("points")) pts.push_back(vec_from(p.is_object() ? p.at("x") : p));
  return PointConfiguration(std::move(w), j.at("seed").get<std::uint64_t>(), std::move(pts),
                            j.value("complete", false));
}

MarkedConfiguration marked_from_json(const nlohmann::json& j) {
  const int d = j.at("d").get<int>();
  Window w = window_from_json(j.at("window"));
  std::vector<Vec> pts;
  std::vector<KernelSpec> marks;
  for (const auto& p : j.at("points")) {
    pts.push_back(vec_from(p.at("x")));
    const auto& m = p.at("mark");
    marks.push_back(KernelSpec{m.at("radius").get<double>(), mat_from(m.at("amplitude"), d)});
  }
  return MarkedConfiguration::make(std::move(w), j.at("seed").get<std::uint64_t>(), std::move(pts),
                                   std::move(marks), j.value("complete", false));
}

}  // namespace fpp
