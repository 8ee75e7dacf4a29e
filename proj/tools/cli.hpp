#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvsde/errors.hpp"
#include "mvsde/schemes.hpp"

namespace mvsde::cli {

enum class Command {
  kSimulateWea,
  kSimulateAwea,
  kConvergence,
  kInvariantTest,
  kCost,
  kCheckAssumptions,
};

std::string to_string(Command c);

/// Invalid or contradictory configuration (exit code 2).
class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// Exit codes of `run`.
enum ExitCode : int {
  kOk = 0,
  kAcceptanceFailed = 1,
  kInvalidConfig = 2,
  kDiverged = 3,
};

/// Fully resolved configuration of one CLI run.
struct ExperimentConfig {
  Command command = Command::kSimulateWea;
  std::string model = "example2";
  AnchorGrid grid{1.0, 256};
  double horizon_t = 100.0;
  std::size_t n_particles = 1;
  std::uint64_t seed = 0;
  std::vector<double> snapshot_times;
  std::string out_dir = ".";
  bool oracle = true;
  int workers = 1;
  InitialSampler initial;

  // convergence
  double fine_delta = 0x1.0p-13;
  std::vector<double> coarse_deltas;
  std::vector<double> t_eval{10.0, 20.0};
  std::size_t n_paths = 100;
  double slope_min = -0.65;
  double slope_max = -0.35;
  double r2_min = 0.9;

  // invariant-test
  double w2_threshold = 0.15;
  double alpha = 0.05;
  std::size_t kde_points = 200;

  // cost
  std::string scheme = "wea";
  std::optional<double> epsilon;
  double rho = 1.0;
  double rate_delta = 0.2;

  // check-assumptions
  std::size_t n_samples = 10000;
  SamplerConfig sampler;
  std::map<std::string, double> constant_overrides;

  /// Every key with its resolved text value, as written to the manifest.
  std::map<std::string, std::string> resolved;
};

/// "2^-q" (also "2^q") or a decimal number.
double parse_step(const std::string& text);

/// Parses `args` (without the program name). A `--config FILE` of
/// `key = value` lines supplies values; command-line flags override them.
/// Throws ConfigError on unknown keys, malformed values or inconsistent
/// grids. Help requests surface as CLI::CallForHelp.
ExperimentConfig parse_config(const std::vector<std::string>& args);

/// Executes the command, writes its CSVs and `manifest.txt` into
/// `config.out_dir`, and returns an ExitCode.
int run(const ExperimentConfig& config, std::ostream& log, std::ostream& err);

/// argv entry point: parse, run, map exceptions to exit codes.
int main_entry(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace mvsde::cli
