#pragma once

// Command-line front end: JSON experiment configs, the five subcommands and
// their report files.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "liouville/minimizer.hpp"

namespace liouville::app {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kNotConverged = 3,
  kExpectedUnboundedness = 4,
  kNumericCorruption = 5,
};

struct SourceSpec {
  double x = 0.0;
  double y = 0.0;
  std::vector<double> alpha;
};

struct SweepAxis {
  int component = 1;  // one-based
  double min = 0.0;
  double max = 0.0;
  int steps = 1;
};

struct SweepBlock {
  std::vector<SweepAxis> axes;
  bool minimize = false;
};

struct BlowupBlock {
  std::vector<double> lambda_list = {8, 16, 32, 64};
  std::vector<int> subset;              // one-based; empty = argmin subset
  std::optional<std::array<double, 2>> point;  // empty = argmin point
};

struct PohozaevBlock {
  std::string field = "bubble";  // bubble | zero | continuation | file
  std::string path;              // for field = file
  double bubble_lambda = 64.0;
  std::array<double, 2> center = {0.5, 0.5};
  std::optional<std::array<double, 2>> point;  // empty = bubble centre / argmax of v_1
  std::vector<double> radii = {0.2, 0.16, 0.125};
  int continuation_steps = 6;
};

struct ExperimentConfig {
  int grid_n = 128;
  std::vector<std::vector<double>> A;
  std::vector<double> rho;
  std::vector<SourceSpec> sources;
  std::string h_spec = "constant";
  std::string init = "zero";  // zero | random
  std::uint64_t seed = 0;
  SolverOptions solver;
  SweepBlock sweep;
  BlowupBlock blowup;
  PohozaevBlock pohozaev;
};

/// Parses and validates; unknown fields are errors. Throws InvalidInput with
/// the offending field path in the message.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Effective config with every default resolved.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Builds the model described by the config (validates h_spec files too).
SingularModel build_model(const ExperimentConfig& cfg);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  int jobs = 1;
  std::optional<std::uint64_t> seed;  // overrides the config seed
};

int cmd_classify(const ExperimentConfig& cfg, const RunOptions& run, std::ostream& out);
int cmd_minimize(const ExperimentConfig& cfg, const RunOptions& run, std::ostream& out);
int cmd_sweep(const ExperimentConfig& cfg, const RunOptions& run, std::ostream& out);
int cmd_blowup_slope(const ExperimentConfig& cfg, const RunOptions& run, std::ostream& out);
int cmd_pohozaev(const ExperimentConfig& cfg, const RunOptions& run, std::ostream& out);

/// Full CLI entry point (argv[0] included). Maps errors to exit codes.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace liouville::app
