#include "fpp/config.hpp"

#include "fpp/io.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace fpp {

using nlohmann::json;

namespace {

// Reads one JSON object and rejects keys that were never asked for.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("must be an object");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  const json* raw(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k) ? &j_.at(k) : nullptr;
  }

  void num(const std::string& k, double& out) {
    if (const json* v = raw(k)) {
      if (!v->is_number()) fail(k + ": expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail(k + ": must be finite");
    }
  }
  void integer(const std::string& k, int& out) {
    if (const json* v = raw(k)) {
      if (!v->is_number_integer()) fail(k + ": expected an integer");
      out = v->get<int>();
    }
  }
  void uint64(const std::string& k, std::uint64_t& out) {
    if (const json* v = raw(k)) {
      if (v->is_number_unsigned()) out = v->get<std::uint64_t>();
      else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) out = static_cast<std::uint64_t>(v->get<std::int64_t>());
      else fail(k + ": expected a non-negative integer");
    }
  }
  void boolean(const std::string& k, bool& out) {
    if (const json* v = raw(k)) {
      if (!v->is_boolean()) fail(k + ": expected true or false");
      out = v->get<bool>();
    }
  }
  void string(const std::string& k, std::string& out) {
    if (const json* v = raw(k)) {
      if (!v->is_string()) fail(k + ": expected a string");
      out = v->get<std::string>();
    }
  }
  void numbers(const std::string& k, std::vector<double>& out) {
    if (const json* v = raw(k)) {
      if (!v->is_array() || v->empty()) fail(k + ": expected a non-empty array of numbers");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_number()) fail(k + ": expected numbers");
        out.push_back(x.get<double>());
      }
    }
  }
  void strings(const std::string& k, std::vector<std::string>& out) {
    if (const json* v = raw(k)) {
      if (!v->is_array()) fail(k + ": expected an array of strings");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_string()) fail(k + ": expected strings");
        out.push_back(x.get<std::string>());
      }
    }
  }
  void vec(const std::string& k, Vec& out) {
    std::vector<double> xs;
    numbers(k, xs);
    if (xs.empty()) return;
    if (xs.size() > static_cast<std::size_t>(kMaxDim)) fail(k + ": at most 3 coordinates");
    out.resize(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) out(static_cast<Eigen::Index>(i)) = xs[i];
  }
  void vecs(const std::string& k, std::vector<Vec>& out) {
    if (const json* v = raw(k)) {
      if (!v->is_array() || v->empty()) fail(k + ": expected a non-empty array of vectors");
      out.clear();
      for (const auto& row : *v) {
        if (!row.is_array() || row.empty() || row.size() > static_cast<std::size_t>(kMaxDim))
          fail(k + ": each entry must be a vector");
        Vec x(static_cast<Eigen::Index>(row.size()));
        for (std::size_t i = 0; i < row.size(); ++i) {
          if (!row[i].is_number()) fail(k + ": expected numbers");
          x(static_cast<Eigen::Index>(i)) = row[i].get<double>();
        }
        out.push_back(x);
      }
    }
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail("unknown key '" + k + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + msg);
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw ConfigError(where + ": " + msg);
}

void require_positive(const std::string& where, const std::string& name, double x) {
  if (!(x > 0.0)) fail(where, name + " must be positive");
}

void require_dim(const std::string& where, const Vec& v, int d) {
  if (v.size() != d) fail(where, "vector dimension does not match the model");
}

void require_ladder(const std::string& where, const std::vector<double>& ts) {
  for (double t : ts) require_positive(where, "every T", t);
}

LagrangianSpec parse_lagrangian(const json& j, int d) {
  Obj o(j, "model.lagrangian");
  std::string fam = "iso_quad";
  o.string("family", fam);
  double a = 1.0, b = 0.0;
  if (fam == "iso_quad") {
    o.num("a", a);
    require_positive(o.path(), "a", a);
    o.finish();
    return LagrangianSpec::iso_quad(d, a);
  }
  if (fam == "quad_plus_quartic") {
    o.num("a", a);
    o.num("b", b);
    require_positive(o.path(), "a", a);
    if (b < 0.0) o.fail("b must be non-negative");
    o.finish();
    return LagrangianSpec::quad_plus_quartic(d, a, b);
  }
  if (fam == "aniso_quad") {
    const json* m = o.raw("M");
    if (!m) o.fail("aniso_quad needs M");
    o.finish();
    try {
      return lagrangian_from_json(json{{"family", fam}, {"M", *m}}, d);
    } catch (const json::exception& e) {
      o.fail(std::string("M: ") + e.what());
    } catch (const InvalidArgument& e) {
      o.fail(e.what());
    }
  }
  o.fail("unknown family '" + fam + "'");
}

Model parse_model(const json& j) {
  Obj o(j, "model");
  std::string type = "broken_line";
  int d = 2;
  o.string("type", type);
  o.integer("dim", d);
  if (d != 2 && d != 3) o.fail("dim must be 2 or 3");
  if (type == "broken_line") {
    BrokenLineModel m;
    double penalty = 1.0;
    o.num("intensity", m.intensity);
    o.num("penalty", penalty);
    require_positive("model", "intensity", m.intensity);
    require_positive("model", "penalty", penalty);
    LagrangianSpec l = LagrangianSpec::iso_quad(d, 1.0);
    if (const json* lj = o.raw("lagrangian")) l = parse_lagrangian(*lj, d);
    o.finish();
    m.cost = BrokenLineCost(l, penalty);
    return m;
  }
  if (type == "riemannian") {
    RiemannianModel m;
    m.dim = d;
    std::string mode = "sum";
    o.string("mode", mode);
    if (mode != "sum" && mode != "product") o.fail("mode must be 'sum' or 'product'");
    m.mode = mode_from_name(mode);
    o.num("lambda", m.lambda);
    o.num("kernel_radius", m.law.radius);
    o.num("kernel_amplitude", m.law.amplitude);
    o.num("intensity", m.intensity);
    o.integer("grid_divisions", m.opts.grid_divisions);
    o.integer("quadrature_subintervals", m.opts.quadrature.subintervals);
    o.integer("max_iterations", m.opts.max_iterations);
    o.num("gradient_tol", m.opts.gradient_tol);
    o.finish();
    if (m.mode == MetricMode::kSum) require_positive("model", "lambda", m.lambda);
    require_positive("model", "kernel_radius", m.law.radius);
    if (m.law.amplitude < 0.0) o.fail("kernel_amplitude must be non-negative");
    require_positive("model", "intensity", m.intensity);
    if (m.opts.grid_divisions < 2) o.fail("grid_divisions must be at least 2");
    if (m.opts.quadrature.subintervals < 2 || m.opts.quadrature.subintervals % 2)
      o.fail("quadrature_subintervals must be even and at least 2");
    if (m.opts.max_iterations < 0) o.fail("max_iterations must be non-negative");
    require_positive("model", "gradient_tol", m.opts.gradient_tol);
    return m;
  }
  o.fail("type must be 'broken_line' or 'riemannian'");
}

}  // namespace

const std::vector<std::string>& subcommand_order() {
  static const std::vector<std::string> order{"sample-env",       "geodesic",        "shape-scan", "limit-shape",
                                              "derivative-check", "hessian-monitor", "diagnostics"};
  return order;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Obj root(j, "");
  root.uint64("base_seed", c.base_seed);
  if (const json* m = root.raw("model")) c.model = parse_model(*m);
  else {
    BrokenLineModel def;
    def.cost = BrokenLineCost(LagrangianSpec::iso_quad(2, 1.0));
    c.model = def;
  }
  const int d = model_dim(c.model);
  if (d != 2) {
    c.geodesic.x = Vec::Zero(d);
    c.geodesic.y = Vec::Zero(d);
    c.geodesic.y(0) = 10.0;
    c.derivative.directions = {Vec::Unit(d, 0)};
    c.hessian.direction = Vec::Unit(d, 0);
  }

  if (const json* g = root.raw("grid")) {
    Obj o(*g, "grid");
    o.integer("directions", c.grid.directions);
    o.numbers("t_ladder", c.grid.t_ladder);
    o.integer("seeds", c.grid.seeds);
    o.boolean("antipodal", c.grid.antipodal);
    o.finish();
  }
  if (c.grid.directions < 1) fail("grid", "directions must be positive");
  if (c.grid.antipodal && c.grid.directions % 2) fail("grid", "antipodal grids need an even direction count");
  if (c.grid.seeds < 1) fail("grid", "seeds must be positive");
  require_ladder("grid", c.grid.t_ladder);

  if (const json* s = root.raw("sample_env")) {
    Obj o(*s, "sample_env");
    o.num("half_width", c.sample_env.half_width);
    o.integer("seed_index", c.sample_env.seed_index);
    o.finish();
  }
  require_positive("sample_env", "half_width", c.sample_env.half_width);
  if (c.sample_env.seed_index < 0) fail("sample_env", "seed_index must be non-negative");

  if (const json* s = root.raw("geodesic")) {
    Obj o(*s, "geodesic");
    o.vec("x", c.geodesic.x);
    o.vec("y", c.geodesic.y);
    o.integer("seed_index", c.geodesic.seed_index);
    o.finish();
  }
  require_dim("geodesic", c.geodesic.x, d);
  require_dim("geodesic", c.geodesic.y, d);
  if (c.geodesic.seed_index < 0) fail("geodesic", "seed_index must be non-negative");

  if (const json* s = root.raw("limit_shape")) {
    Obj o(*s, "limit_shape");
    o.num("t", c.limit_shape.t);
    o.boolean("empirical_ball", c.limit_shape.empirical_ball);
    o.num("grid_step", c.limit_shape.grid_step);
    o.integer("ball_rays", c.limit_shape.ball_rays);
    o.integer("seed_index", c.limit_shape.seed_index);
    o.finish();
  }
  if (c.limit_shape.t < 0.0) fail("limit_shape", "t must be non-negative");
  require_positive("limit_shape", "grid_step", c.limit_shape.grid_step);
  if (c.limit_shape.ball_rays < 3) fail("limit_shape", "ball_rays must be at least 3");
  if (c.limit_shape.seed_index < 0) fail("limit_shape", "seed_index must be non-negative");

  if (const json* s = root.raw("derivative")) {
    Obj o(*s, "derivative");
    o.vecs("directions", c.derivative.directions);
    o.numbers("t_ladder", c.derivative.t_ladder);
    o.integer("seeds", c.derivative.seeds);
    o.num("epsilon", c.derivative.epsilon);
    o.num("delta", c.derivative.delta);
    o.finish();
  }
  for (const Vec& v : c.derivative.directions) {
    require_dim("derivative", v, d);
    if (!(v.norm() > 0.0)) fail("derivative", "directions must be non-zero");
  }
  require_ladder("derivative", c.derivative.t_ladder);
  if (c.derivative.seeds < 1) fail("derivative", "seeds must be positive");
  require_positive("derivative", "delta", c.derivative.delta);
  if (!(c.derivative.epsilon > 0.0 && c.derivative.epsilon < c.derivative.delta / 4.0))
    fail("derivative", "epsilon must lie in (0, delta/4)");

  if (const json* s = root.raw("hessian")) {
    Obj o(*s, "hessian");
    o.vec("direction", c.hessian.direction);
    o.numbers("t_ladder", c.hessian.t_ladder);
    o.integer("seeds", c.hessian.seeds);
    o.integer("w_samples", c.hessian.w_samples);
    o.num("delta", c.hessian.delta);
    o.finish();
  }
  require_dim("hessian", c.hessian.direction, d);
  if (!(c.hessian.direction.norm() > 0.0)) fail("hessian", "direction must be non-zero");
  require_ladder("hessian", c.hessian.t_ladder);
  if (c.hessian.seeds < 1 || c.hessian.w_samples < 1) fail("hessian", "seeds and w_samples must be positive");
  require_positive("hessian", "delta", c.hessian.delta);

  if (const json* s = root.raw("diagnostics")) {
    Obj o(*s, "diagnostics");
    o.integer("metric_triples", c.diagnostics.metric_triples);
    o.num("metric_spread", c.diagnostics.metric_spread);
    o.integer("animal_n_max", c.diagnostics.animal_n_max);
    o.integer("animal_seeds", c.diagnostics.animal_seeds);
    o.integer("localization_pairs", c.diagnostics.localization_pairs);
    o.integer("seed_index", c.diagnostics.seed_index);
    o.finish();
  }
  if (c.diagnostics.metric_triples < 1) fail("diagnostics", "metric_triples must be positive");
  require_positive("diagnostics", "metric_spread", c.diagnostics.metric_spread);
  if (c.diagnostics.animal_n_max < 1 || c.diagnostics.animal_n_max > (d == 2 ? 8 : 5))
    fail("diagnostics", "animal_n_max must lie in [1, 8] in 2D and [1, 5] in 3D");
  if (c.diagnostics.animal_seeds < 1) fail("diagnostics", "animal_seeds must be positive");
  if (c.diagnostics.localization_pairs < 0) fail("diagnostics", "localization_pairs must be non-negative");
  if (c.diagnostics.seed_index < 0) fail("diagnostics", "seed_index must be non-negative");

  if (const json* s = root.raw("checks")) {
    Obj o(*s, "checks");
    auto& t = c.checks.tol;
    o.num("convexity_sigma", t.convexity_sigma);
    o.num("homogeneity_sigma", t.homogeneity_sigma);
    o.num("homogeneity_exact", t.homogeneity_exact);
    o.num("derivative_sigma", t.derivative_sigma);
    o.num("derivative_relative", t.derivative_relative);
    o.num("derivative_absolute", t.derivative_absolute);
    o.num("hessian_factor", t.hessian_factor);
    o.num("bias_slack", t.bias_slack);
    o.num("triangle_tol", c.checks.triangle_tol);
    o.num("sandwich_epsilon", c.checks.sandwich_epsilon);
    o.num("animal_factor", c.checks.animal_factor);
    o.num("localization_tol", c.checks.localization_tol);
    o.finish();
  }
  {
    const auto& t = c.checks.tol;
    const std::pair<const char*, double> positive[] = {
        {"convexity_sigma", t.convexity_sigma},         {"homogeneity_sigma", t.homogeneity_sigma},
        {"homogeneity_exact", t.homogeneity_exact},     {"derivative_sigma", t.derivative_sigma},
        {"derivative_relative", t.derivative_relative}, {"hessian_factor", t.hessian_factor},
        {"bias_slack", t.bias_slack},                   {"triangle_tol", c.checks.triangle_tol},
        {"sandwich_epsilon", c.checks.sandwich_epsilon}, {"animal_factor", c.checks.animal_factor},
        {"localization_tol", c.checks.localization_tol}};
    for (const auto& [name, x] : positive) require_positive("checks", name, x);
    // An additive floor, not a threshold: zero is allowed.
    if (t.derivative_absolute < 0.0) fail("checks", "derivative_absolute must be non-negative");
    if (c.checks.sandwich_epsilon >= 1.0) fail("checks", "sandwich_epsilon must be below 1");
  }

  if (const json* s = root.raw("output")) {
    Obj o(*s, "output");
    o.string("directory", c.output.directory);
    o.strings("formats", c.output.formats);
    o.finish();
  }
  for (const auto& f : c.output.formats)
    if (f != "csv" && f != "json" && f != "svg") fail("output", "unknown format '" + f + "'");

  c.run = subcommand_order();
  root.strings("run", c.run);
  for (const auto& r : c.run) {
    const auto& order = subcommand_order();
    if (std::find(order.begin(), order.end(), r) == order.end()) fail("run", "unknown subcommand '" + r + "'");
  }
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return parse_config(j);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json dirs = json::array();
  for (const Vec& v : c.derivative.directions) dirs.push_back(vec(v));
  const auto& t = c.checks.tol;
  return {{"base_seed", c.base_seed},
          {"model", to_json(c.model)},
          {"grid",
           {{"directions", c.grid.directions},
            {"t_ladder", c.grid.t_ladder},
            {"seeds", c.grid.seeds},
            {"antipodal", c.grid.antipodal}}},
          {"sample_env", {{"half_width", c.sample_env.half_width}, {"seed_index", c.sample_env.seed_index}}},
          {"geodesic", {{"x", vec(c.geodesic.x)}, {"y", vec(c.geodesic.y)}, {"seed_index", c.geodesic.seed_index}}},
          {"limit_shape",
           {{"t", c.limit_shape.t},
            {"empirical_ball", c.limit_shape.empirical_ball},
            {"grid_step", c.limit_shape.grid_step},
            {"ball_rays", c.limit_shape.ball_rays},
            {"seed_index", c.limit_shape.seed_index}}},
          {"derivative",
           {{"directions", dirs},
            {"t_ladder", c.derivative.t_ladder},
            {"seeds", c.derivative.seeds},
            {"epsilon", c.derivative.epsilon},
            {"delta", c.derivative.delta}}},
          {"hessian",
           {{"direction", vec(c.hessian.direction)},
            {"t_ladder", c.hessian.t_ladder},
            {"seeds", c.hessian.seeds},
            {"w_samples", c.hessian.w_samples},
            {"delta", c.hessian.delta}}},
          {"diagnostics",
           {{"metric_triples", c.diagnostics.metric_triples},
            {"metric_spread", c.diagnostics.metric_spread},
            {"animal_n_max", c.diagnostics.animal_n_max},
            {"animal_seeds", c.diagnostics.animal_seeds},
            {"localization_pairs", c.diagnostics.localization_pairs},
            {"seed_index", c.diagnostics.seed_index}}},
          {"checks",
           {{"convexity_sigma", t.convexity_sigma},
            {"homogeneity_sigma", t.homogeneity_sigma},
            {"homogeneity_exact", t.homogeneity_exact},
            {"derivative_sigma", t.derivative_sigma},
            {"derivative_relative", t.derivative_relative},
            {"derivative_absolute", t.derivative_absolute},
            {"hessian_factor", t.hessian_factor},
            {"bias_slack", t.bias_slack},
            {"triangle_tol", c.checks.triangle_tol},
            {"sandwich_epsilon", c.checks.sandwich_epsilon},
            {"animal_factor", c.checks.animal_factor},
            {"localization_tol", c.checks.localization_tol}}},
          {"output", {{"directory", c.output.directory}, {"formats", c.output.formats}}},
          {"run", c.run}};
}

}  // namespace fpp
