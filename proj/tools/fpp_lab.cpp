// fpp_lab: config-driven experiment runner.
//
//   fpp_lab run --config smoke.json --out out/ --jobs 4
//   fpp_lab shape-scan --config c.json --format csv --format svg
//
// Exit codes: 0 success, 1 check failure, 2 config or usage error,
// 3 solver error.

#include "fpp/io.hpp"
#include "fpp/lab.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>

#include <cstdio>

int main(int argc, char** argv) {
  CLI::App app{"First-passage percolation lab: shape estimates, checks and diagnostics"};
  app.fallthrough();
  app.require_subcommand(1, 1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<std::string> formats;
  int jobs = 0;
  bool quiet = false;
  app.add_option("--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Overrides base_seed");
  auto* out_opt = app.add_option("--out", out_dir, "Artifact directory");
  auto* fmt_opt = app.add_option("--format", formats, "csv, json or svg (repeatable)")
                      ->check(CLI::IsMember({"csv", "json", "svg"}))
                      ->take_all()
                      ->allow_extra_args(false);
  app.add_option("--jobs", jobs, "Worker count (default: every logical core)")->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet", quiet, "No progress messages");

  app.add_subcommand("run", "Run the subcommands listed in the config, in dependency order");
  for (const auto& name : fpp::subcommand_order()) app.add_subcommand(name, "Run the " + name + " stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fpp::kExitConfigError;
  }

  fpp::ExperimentConfig cfg;
  std::string config_text;
  try {
    if (config_path.empty()) {
      cfg = fpp::parse_config(nlohmann::json::object());
    } else {
      config_text = fpp::read_text_file(config_path);
      cfg = fpp::load_config(config_path);
    }
  } catch (const fpp::InvalidArgument& e) {
    fmt::print(stderr, "fpp_lab: {}\n", e.what());
    return fpp::kExitConfigError;
  }

  fpp::LabOptions opts;
  if (*seed_opt) opts.seed = seed;
  if (*out_opt) opts.out_dir = out_dir;
  if (*fmt_opt) opts.formats = formats;
  opts.jobs = jobs;
  opts.quiet = quiet;

  const std::string sub = app.get_subcommands().front()->get_name();
  const std::vector<std::string> stages = sub == "run" ? cfg.run : std::vector<std::string>{sub};
  fpp::LabOutcome outcome;
  try {
    outcome = fpp::run_lab(cfg, stages, opts, config_text);
  } catch (const std::exception& e) {
    fmt::print(stderr, "fpp_lab: {}\n", e.what());
    return fpp::kExitSolverError;
  }
  if (!outcome.error.empty()) fmt::print(stderr, "fpp_lab: {}\n", outcome.error);
  if (outcome.exit_code == fpp::kExitCheckFailed) {
    fmt::print(stderr, "fpp_lab: failing checks:\n");
    for (const auto& f : outcome.failures) fmt::print(stderr, "  {}\n", f);
  }
  return outcome.exit_code;
}
