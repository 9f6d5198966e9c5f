#pragma once

#include "fpp/shape.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fpp {

/// Schema violation in an experiment config.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct GridConfig {
  int directions = 8;
  std::vector<double> t_ladder{10.0, 20.0};
  int seeds = 8;
  bool antipodal = false;
};

struct SampleEnvConfig {
  double half_width = 10.0;
  int seed_index = 0;
};

struct GeodesicConfig {
  Vec x = make_vec({0, 0});
  Vec y = make_vec({10, 0});
  int seed_index = 0;
};

struct LimitShapeConfig {
  double t = 0.0;  // 0: largest T of the grid ladder
  bool empirical_ball = false;
  double grid_step = 1.0;
  int ball_rays = 64;
  int seed_index = 0;
};

struct DerivativeConfig {
  std::vector<Vec> directions{make_vec({1, 0})};
  std::vector<double> t_ladder{10.0, 20.0};
  int seeds = 8;
  double epsilon = 0.1;
  double delta = 1.0;
};

struct HessianConfig {
  Vec direction = make_vec({1, 0});
  std::vector<double> t_ladder{10.0, 20.0};
  int seeds = 4;
  int w_samples = 16;
  double delta = 1.0;
};

struct DiagnosticsConfig {
  int metric_triples = 10;
  double metric_spread = 5.0;
  int animal_n_max = 5;
  int animal_seeds = 5;
  int localization_pairs = 5;
  int seed_index = 0;
};

struct ChecksConfig {
  Tolerances tol;
  double triangle_tol = 1e-9;
  double sandwich_epsilon = 0.15;
  double animal_factor = 2.0;
  double localization_tol = 1e-12;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json", "svg"};
};

struct ExperimentConfig {
  std::uint64_t base_seed = 1;
  Model model;
  GridConfig grid;
  SampleEnvConfig sample_env;
  GeodesicConfig geodesic;
  LimitShapeConfig limit_shape;
  DerivativeConfig derivative;
  HessianConfig hessian;
  DiagnosticsConfig diagnostics;
  ChecksConfig checks;
  OutputConfig output;
  std::vector<std::string> run;  // subcommands executed by `run`
};

/// Subcommand names in dependency order.
const std::vector<std::string>& subcommand_order();

/// Parses and validates a config document; throws ConfigError on unknown
/// keys, wrong types, or non-positive tolerances.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

nlohmann::json to_json(const ExperimentConfig& c);

}  // namespace fpp
