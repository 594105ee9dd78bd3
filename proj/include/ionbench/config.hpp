#pragma once

#include "ionbench/hybrid.hpp"
#include "ionbench/identification.hpp"
#include "ionbench/soh.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ionbench {

struct SimulateSection {
  std::optional<std::filesystem::path> profile;  // CSV with t, I (and optional T)
  std::optional<DriveCycleOptions> drive_cycle;  // used when no profile file is given
  SimulationOptions options;
};

struct IdentifySection {
  std::optional<std::filesystem::path> dataset;  // CSV with t, I, V and optional SOC_CC
  double initial_soc = 1.0;
  double capacity_ah = 0;                        // 0: the model's window capacity
  ParameterSpec spec;
  IdentificationOptions options;
};

struct SohSection {
  std::optional<std::filesystem::path> cycles;   // cycling CSV; synthetic data when absent
  std::optional<std::filesystem::path> model;    // trained model for `soh predict`
  SyntheticCyclingOptions synthetic;
  SohOptions options;
  double train_fraction = 0.7;                   // chronological split for `soh eval`
  int histogram_bins = 12;
};

struct HybridSection {
  std::optional<std::filesystem::path> experiment;  // t, I, V measured on the simulation profile
  std::optional<std::filesystem::path> validation;  // second record for the grid search
  std::optional<std::filesystem::path> forest;      // trained model for `hybrid simulate`
  HysteresisInjection injection;                    // synthetic experiment when no file is given
  std::uint64_t validation_drive_seed = 2;
  ForestOptions forest_options;
  std::optional<ForestGrid> grid;
};

/// Parsed, validated run configuration. Relative paths are resolved against
/// the directory of the config file.
struct WorkbenchConfig {
  nlohmann::json document;  // the validated input, seed override applied
  std::filesystem::path source;
  std::uint64_t seed = 1;
  int threads = 1;
  std::optional<std::filesystem::path> output;

  Model model;
  std::vector<std::filesystem::path> ocp_files;
  SimulateSection simulate;
  IdentifySection identify;
  SohSection soh;
  HybridSection hybrid;

  /// SHA-256 of the canonical JSON form: insensitive to key order and
  /// whitespace, sensitive to any value change.
  std::string digest() const;

  /// Every input file the config references, in a fixed order.
  std::vector<std::filesystem::path> input_files() const;
};

/// Throws Error(Errc::validation) naming the offending key on unknown keys,
/// wrong types, out-of-range values or missing files.
WorkbenchConfig parse_config(const nlohmann::json& document, const std::filesystem::path& base_dir,
                             std::optional<std::uint64_t> seed_override = std::nullopt);
WorkbenchConfig load_config(const std::filesystem::path& path,
                            std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace ionbench
