#pragma once

#include "fpp/config.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fpp {

inline constexpr const char* kLabVersion = "1.0.0";
inline constexpr int kManifestSchemaVersion = 1;

enum ExitCode { kExitOk = 0, kExitCheckFailed = 1, kExitConfigError = 2, kExitSolverError = 3 };

struct LabOptions {
  std::optional<std::string> out_dir;               // overrides output.directory
  std::optional<std::vector<std::string>> formats;  // overrides output.formats
  std::optional<std::uint64_t> seed;                // overrides base_seed
  int jobs = 0;                                     // <= 0: every logical core
  bool quiet = false;
};

struct StageOutcome {
  std::string name;
  double wall_seconds = 0.0;
  std::vector<std::string> artifacts;  // paths relative to the output directory
  std::vector<std::string> failures;   // failing checks
  std::vector<std::string> skipped;    // checks that do not apply
};

struct LabOutcome {
  int exit_code = kExitOk;
  std::string error;  // config or solver error message
  std::vector<StageOutcome> stages;
  std::vector<std::string> failures;
};

/// Runs the given subcommands (in dependency order, each at most once) and
/// writes their artifacts and manifest.json into the output directory.
/// Every CSV and JSON artifact except the manifest depends only on
/// (config, seed); the job count changes wall time only.
LabOutcome run_lab(ExperimentConfig cfg, const std::vector<std::string>& subcommands, const LabOptions& opts,
                   const std::string& config_text = "");

/// Seed precedence: --seed, then FPP_LAB_SEED, then the config's base_seed.
std::uint64_t resolve_seed(const ExperimentConfig& cfg, const LabOptions& opts);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& s);

}  // namespace fpp
