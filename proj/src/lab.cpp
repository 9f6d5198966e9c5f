#include "fpp/lab.hpp"

#include "fpp/diagnostics.hpp"
#include "fpp/io.hpp"
#include "fpp/parallel.hpp"

#include <boost/version.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>

namespace fpp {

using nlohmann::json;

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::uint64_t resolve_seed(const ExperimentConfig& cfg, const LabOptions& opts) {
  if (opts.seed) return *opts.seed;
  if (const char* env = std::getenv("FPP_LAB_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || *end != '\0' || env[0] == '-') throw ConfigError("FPP_LAB_SEED must be a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }
  return cfg.base_seed;
}

namespace {

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string vec_label(const Vec& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v(i));
  return s + ")";
}

class Lab {
 public:
  Lab(const ExperimentConfig& cfg, const LabOptions& opts, std::uint64_t seed)
      : cfg_(cfg), quiet_(opts.quiet), d_(model_dim(cfg.model)) {
    so_.base_seed = seed;
    so_.jobs = opts.jobs;
    out_ = opts.out_dir ? *opts.out_dir : cfg.output.directory;
    const auto& f = opts.formats ? *opts.formats : cfg.output.formats;
    formats_ = std::set<std::string>(f.begin(), f.end());
  }

  const std::string& out_dir() const { return out_; }

  StageOutcome run(const std::string& name) {
    StageOutcome st;
    st.name = name;
    stage_ = &st;
    log("{}: start", name);
    const auto t0 = std::chrono::steady_clock::now();
    if (name == "sample-env") sample_env();
    else if (name == "geodesic") geodesic_stage();
    else if (name == "shape-scan") shape_scan_stage();
    else if (name == "limit-shape") limit_shape_stage();
    else if (name == "derivative-check") derivative_stage();
    else if (name == "hessian-monitor") hessian_stage();
    else if (name == "diagnostics") diagnostics_stage();
    else throw ConfigError("unknown subcommand '" + name + "'");
    st.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& f : st.failures) log("{}: FAILED {}", name, f);
    log("{}: done in {:.2f} s", name, st.wall_seconds);
    stage_ = nullptr;
    return st;
  }

 private:
  template <class... Args>
  void log(fmt::format_string<Args...> f, Args&&... args) const {
    if (!quiet_) fmt::print(stderr, "[fpp_lab] {}\n", fmt::format(f, std::forward<Args>(args)...));
  }

  bool wants(const char* fmt_name) const { return formats_.count(fmt_name) > 0; }

  void emit(const std::string& file, const std::string& content) {
    write_text_file((std::filesystem::path(out_) / file).string(), content);
    stage_->artifacts.push_back(file);
  }
  void emit_json(const std::string& stem, const json& j) {
    if (wants("json")) emit(stem + ".json", dump_json(j));
  }
  void emit_csv(const std::string& stem, const std::string& csv) {
    if (wants("csv")) emit(stem + ".csv", csv);
  }
  void emit_svg(const std::string& stem, const std::vector<SvgLayer>& layers) {
    if (wants("svg") && d_ == 2) emit(stem + ".svg", render_svg(layers));
  }

  void check(bool pass, const std::string& what) {
    if (!pass) stage_->failures.push_back(what);
  }

  const BrokenLineModel* bl() const { return std::get_if<BrokenLineModel>(&cfg_.model); }

  double intensity() const {
    if (const auto* b = bl()) return b->intensity;
    return std::get<RiemannianModel>(cfg_.model).intensity;
  }

  const PointConfiguration& points_of(const Environment& env) const {
    return bl() ? env.points : env.field.marks().config;
  }

  std::vector<Vec> points_vec(const PointConfiguration& c) const { return {c.points().begin(), c.points().end()}; }

  // Solves on a cellwise environment, growing the window after a SolverError.
  template <class Fn>
  auto with_env(std::uint64_t seed, double half_width, Fn&& fn) {
    double hw = std::ceil(half_width);
    for (int attempt = 0;; ++attempt) {
      const Environment env = sample_environment(cfg_.model, seed, hw);
      try {
        return fn(env);
      } catch (const SolverError&) {
        if (attempt >= so_.max_retries) throw;
      }
      hw = std::ceil(hw * so_.window_growth);
    }
  }

  // ---- stages ----------------------------------------------------------------------

  void sample_env() {
    const auto& c = cfg_.sample_env;
    const std::uint64_t seed = environment_seed(so_, static_cast<std::uint64_t>(c.seed_index));
    const Environment env = sample_environment(cfg_.model, seed, c.half_width);
    json j{{"model", to_json(cfg_.model)}, {"seed_index", c.seed_index}, {"half_width", env.half_width}};
    j["environment"] = bl() ? to_json(env.points) : to_json(env.field);
    emit_json("environment", j);
    emit_csv("environment", points_csv(points_of(env)));
    emit_svg("environment", {SvgLayer{points_vec(points_of(env)), false, true, "#555"}});
  }

  void geodesic_stage() {
    const auto& c = cfg_.geodesic;
    const std::uint64_t seed = environment_seed(so_, static_cast<std::uint64_t>(c.seed_index));
    const double hw = 0.5 * (c.x + c.y).norm() + initial_half_width(cfg_.model, (c.y - c.x).norm());
    json j{{"model", to_json(cfg_.model)}, {"seed_index", c.seed_index}, {"x", vec_json(c.x)}, {"y", vec_json(c.y)}};
    std::vector<Vec> path, env_points;
    with_env(seed, hw, [&](const Environment& env) {
      if (const auto* b = bl()) {
        const auto g = geodesic(env.points, b->cost, c.x, c.y, b->opts);
        j["result"] = to_json(g);
        path = g.path.vertices;
      } else {
        const auto g = riemannian_geodesic(env.field, c.x, c.y, std::get<RiemannianModel>(cfg_.model).opts);
        j["result"] = to_json(g);
        path = g.path.vertices;
      }
      j["half_width"] = env.half_width;
      env_points = points_vec(points_of(env));
      return 0;
    });
    emit_json("geodesic", j);
    emit_csv("geodesic", path_csv(path));
    emit_svg("geodesic", {SvgLayer{env_points, false, true, "#999"}, SvgLayer{path, false, false, "#c00"}});
  }

  const ShapeEstimate& scan() {
    if (!scan_) {
      const auto grid = DirectionGrid::make(d_, cfg_.grid.directions, cfg_.grid.antipodal);
      scan_ = shape_scan(cfg_.model, grid, cfg_.grid.t_ladder, cfg_.grid.seeds, so_);
    }
    return *scan_;
  }

  void shape_scan_stage() {
    const auto& e = scan();
    emit_json("shape_estimate", to_json(e));
    emit_csv("shape_estimate", shape_estimate_csv(e));
    if (d_ != 2) {
      stage_->skipped.push_back("convexity (2D only)");
      return;
    }
    const double t = *std::max_element(e.t_ladder.begin(), e.t_ladder.end());
    const auto rep = convexity_check(e, t, cfg_.checks.tol);
    emit_json("convexity", to_json(rep));
    if (rep.triples.empty()) stage_->skipped.push_back("convexity (no quarter-turn triples on this grid)");
    else check(rep.pass, fmt::format("convexity at T={}: {} violating triples", format_double(t), rep.failures));
  }

  void limit_shape_stage() {
    const auto& e = scan();
    const auto& c = cfg_.limit_shape;
    const double t = c.t > 0.0 ? c.t : *std::max_element(e.t_ladder.begin(), e.t_ladder.end());
    const LimitShape shape = limit_shape_from_lambda(e, t);
    json j{{"t", t}, {"source", shape.source}};
    json b = json::array();
    for (const Vec& p : shape.boundary) b.push_back(vec_json(p));
    j["boundary"] = b;
    std::vector<SvgLayer> layers{SvgLayer{shape.boundary, true, false, "#06c"}};
    if (c.empirical_ball) {
      if (bl() == nullptr || d_ != 2) {
        stage_->skipped.push_back("sandwich (broken-line model in 2D only)");
      } else {
        const auto rays = DirectionGrid::make(2, c.ball_rays);
        const auto ball = empirical_ball(cfg_.model, environment_seed(so_, static_cast<std::uint64_t>(c.seed_index)),
                                         t, c.grid_step, rays, so_);
        const auto rep = sandwich_check(ball, shape, cfg_.checks.sandwich_epsilon);
        j["empirical_ball"] = {{"grid_step", ball.grid_step},
                               {"search_radius", ball.search_radius},
                               {"boundary", json::array()}};
        for (const Vec& p : ball.shape.boundary) j["empirical_ball"]["boundary"].push_back(vec_json(p));
        j["sandwich"] = to_json(rep);
        emit_csv("empirical_ball", limit_shape_csv(ball.shape));
        layers.push_back(SvgLayer{ball.shape.boundary, true, false, "#c00"});
        check(rep.pass, fmt::format("sandwich at T={}: {} inner and {} outer misses", format_double(t),
                                    rep.inner_misses, rep.outer_misses));
      }
    }
    emit_json("limit_shape", j);
    emit_csv("limit_shape", limit_shape_csv(shape));
    emit_svg("limit_shape", layers);
  }

  void derivative_stage() {
    const auto& c = cfg_.derivative;
    json reports = json::array();
    for (const Vec& v : c.directions) {
      const ShearFrame frame(v, c.delta);
      const auto rep = derivative_check(cfg_.model, frame, c.t_ladder, c.seeds, c.epsilon, so_, cfg_.checks.tol);
      json r = to_json(rep);
      r["v"] = vec_json(v);
      reports.push_back(r);
      check(rep.pass, "derivative at v=" + vec_label(v));
    }
    emit_json("derivative", {{"reports", reports}});
  }

  void hessian_stage() {
    const auto& c = cfg_.hessian;
    const ShearFrame frame(c.direction, c.delta);
    const auto rep = hessian_monitor(cfg_.model, frame, c.t_ladder, c.w_samples, c.seeds, so_, cfg_.checks.tol);
    json j = to_json(rep);
    j["v"] = vec_json(c.direction);
    emit_json("hessian", j);
    emit_csv("hessian", hessian_csv(rep));
    check(rep.pass, fmt::format("hessian monitor: max {} above {} x median {}", format_double(rep.max),
                                format_double(cfg_.checks.tol.hessian_factor), format_double(rep.median)));
  }

  void diagnostics_stage() {
    const auto& c = cfg_.diagnostics;
    const auto& ck = cfg_.checks;
    json j;
    const std::uint64_t env_seed = environment_seed(so_, static_cast<std::uint64_t>(c.seed_index));
    const double sqrt_d = std::sqrt(static_cast<double>(d_));
    const double hw = c.metric_spread * sqrt_d + initial_half_width(cfg_.model, 2.0 * sqrt_d * c.metric_spread);
    const Environment env = sample_environment(cfg_.model, env_seed, hw);

    const auto metric = metric_axiom_suite(cfg_.model, env, c.metric_triples, c.metric_spread,
                                           derive_seed(env_seed, 0x6d6574726963ULL), ck.triangle_tol);
    j["metric_axioms"] = to_json(metric);
    check(metric.pass, "metric axioms");

    if (const auto* b = bl()) {
      // Collinearity on a small sample (the scan is cubic).
      const double side = std::max(1.0, std::floor(std::pow(100.0 / b->intensity, 1.0 / d_)));
      const auto small = sample_points(Window::cube(d_, 0.0, side), derive_seed(env_seed, 0x636f6cULL), b->intensity);
      if (small.size() <= 200) {
        const auto triples = collinear_triples(small);
        j["collinear"] = {{"points", small.size()}, {"side", side}, {"triples", triples.size()}};
        check(triples.empty(), fmt::format("collinear triples in a generic sample: {}", triples.size()));
      } else {
        stage_->skipped.push_back("collinearity (sample above 200 points)");
      }

      Engine eng(derive_seed(env_seed, 0x6c6f63ULL));
      std::vector<std::pair<Vec, Vec>> pairs;
      for (int i = 0; i < c.localization_pairs; ++i) {
        Vec x(d_), y(d_);
        for (int k = 0; k < d_; ++k) x(k) = uniform(eng, -c.metric_spread, c.metric_spread);
        for (int k = 0; k < d_; ++k) y(k) = uniform(eng, -c.metric_spread, c.metric_spread);
        pairs.emplace_back(x, y);
      }
      const auto loc = localization_audit(env.points, b->cost, pairs, b->opts);
      bool loc_pass = true;
      for (const auto& en : loc.entries)
        if (en.certified && en.resolved && en.difference > ck.localization_tol) loc_pass = false;
      json lj = to_json(loc);
      lj["pass"] = loc_pass;
      lj["tolerance"] = ck.localization_tol;
      j["localization"] = lj;
      check(loc_pass, "localization audit");
    } else {
      stage_->skipped.push_back("collinearity and localization (broken-line model only)");
    }

    // Greedy lattice animals of the Poisson count field, averaged over seeds.
    const int n_max = c.animal_n_max;
    const Window aw = Window::cube(d_, -(n_max + 1), n_max + 2);
    AnimalReport mean;
    bool enumerators_agree = true;
    json per_seed = json::array();
    for (int s = 0; s < c.animal_seeds; ++s) {
      const auto pts = sample_points(aw, derive_seed(environment_seed(so_, static_cast<std::uint64_t>(s)), 0x616e696dULL),
                                     intensity());
      const auto field = poisson_count_field(pts);
      const auto r = lattice_animal_max(field, d_, n_max);
      if (n_max <= 5) {
        const auto rb = lattice_animal_max_bfs(field, d_, n_max);
        if (rb.max != r.max || rb.sets != r.sets) enumerators_agree = false;
      }
      if (s == 0) {
        mean = r;
        std::fill(mean.max.begin(), mean.max.end(), 0.0);
      }
      for (std::size_t i = 0; i < r.max.size(); ++i) mean.max[i] += r.max[i];
      per_seed.push_back(r.max);
    }
    for (std::size_t i = 0; i < mean.max.size(); ++i) {
      mean.max[i] /= c.animal_seeds;
      mean.ratio[i] = mean.max[i] / mean.n[i];
    }
    const bool bounded = animal_ratio_bounded(mean, ck.animal_factor);
    json aj = to_json(mean);
    aj["seeds"] = c.animal_seeds;
    aj["per_seed_max"] = per_seed;
    aj["dfs_equals_bfs"] = n_max <= 5 ? json(enumerators_agree) : json("not checked above n = 5");
    aj["ratio_bounded"] = bounded;
    j["animals"] = aj;
    emit_csv("animals", animal_csv(mean));
    check(enumerators_agree, "lattice animals: depth-first and breadth-first enumerators disagree");
    check(bounded, "lattice animals: ratio trend not bounded");
    emit_json("diagnostics", j);
  }

  const ExperimentConfig& cfg_;
  bool quiet_;
  int d_;
  SamplingOptions so_;
  std::string out_;
  std::set<std::string> formats_;
  std::optional<ShapeEstimate> scan_;
  StageOutcome* stage_ = nullptr;
};

}  // namespace

LabOutcome run_lab(ExperimentConfig cfg, const std::vector<std::string>& subcommands, const LabOptions& opts,
                   const std::string& config_text) {
  LabOutcome outcome;
  const auto wall0 = std::chrono::steady_clock::now();
  std::uint64_t seed = cfg.base_seed;
  std::string out_dir = opts.out_dir ? *opts.out_dir : cfg.output.directory;
  std::vector<std::string> order;
  try {
    seed = resolve_seed(cfg, opts);
    cfg.base_seed = seed;
    for (const auto& name : subcommand_order())
      if (std::find(subcommands.begin(), subcommands.end(), name) != subcommands.end()) order.push_back(name);
    for (const auto& name : subcommands)
      if (std::find(order.begin(), order.end(), name) == order.end())
        throw ConfigError("unknown subcommand '" + name + "'");
    Lab lab(cfg, opts, seed);
    out_dir = lab.out_dir();
    for (const auto& name : order) {
      outcome.stages.push_back(lab.run(name));
      for (const auto& f : outcome.stages.back().failures) outcome.failures.push_back(name + ": " + f);
    }
    outcome.exit_code = outcome.failures.empty() ? kExitOk : kExitCheckFailed;
  } catch (const SolverError& e) {
    outcome.exit_code = kExitSolverError;
    outcome.error = e.what();
  } catch (const InvalidArgument& e) {
    outcome.exit_code = kExitConfigError;
    outcome.error = e.what();
  }

  json stages = json::array();
  for (const auto& s : outcome.stages)
    stages.push_back({{"name", s.name},
                      {"wall_seconds", s.wall_seconds},
                      {"artifacts", s.artifacts},
                      {"failures", s.failures},
                      {"skipped", s.skipped}});
  const json manifest{
      {"schema_version", kManifestSchemaVersion},
      {"tool", "fpp_lab"},
      {"versions",
       {{"fpp_lab", kLabVersion},
        {"compiler", __VERSION__},
        {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
        {"fmt", FMT_VERSION},
        {"boost", BOOST_LIB_VERSION},
        {"nlohmann_json",
         fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR, NLOHMANN_JSON_VERSION_PATCH)}}},
      {"config_hash", fnv1a_hex(to_json(cfg).dump())},
      {"config_file_hash", config_text.empty() ? json(nullptr) : json(fnv1a_hex(config_text))},
      {"config", to_json(cfg)},
      {"seed", seed},
      {"jobs", resolve_jobs(opts.jobs)},
      {"subcommands", order},
      {"stages", stages},
      {"total_wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count()},
      {"exit_code", outcome.exit_code},
      {"error", outcome.error},
      {"failures", outcome.failures}};
  try {
    write_text_file((std::filesystem::path(out_dir) / "manifest.json").string(), dump_json(manifest));
  } catch (const Error&) {
    if (outcome.exit_code == kExitOk) throw;
  }
  return outcome;
}

}  // namespace fpp
