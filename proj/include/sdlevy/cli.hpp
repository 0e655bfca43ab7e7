#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sdlevy/model.hpp"
#include "sdlevy/pricing.hpp"

namespace sdlevy::cli {

/// Everything a batch run needs. Populated from a `key = value` file and
/// then from command-line overrides, which win.
struct RunConfig {
  ModelKind model = ModelKind::SSD;
  std::string parameter_set = "power_pair";
  std::string quotes_path;
  std::string history_path;
  std::string calibration_path;  // defaults to <out_dir>/calibration.json
  std::string out_dir = "out";

  double r = 0.015;
  std::map<std::string, double> F0;  // keyed by asset id
  double strike_window = 10.0;
  std::optional<double> target_rho;  // replaces the historical correlation
  bool relative_errors = false;
  std::map<std::string, double> pinned;

  std::uint64_t seed = 20200731;
  std::size_t n_paths = 100000;
  bool antithetic = false;
  FourierGrid vanilla_grid = FourierGrid::vanilla_default();
  FourierGrid spread_grid = FourierGrid::spread_default();

  std::vector<double> strikes;  // empty: ladder around F1(0) - F2(0)
  std::optional<double> maturity;
  std::size_t steps = 12;
  std::vector<double> a_values{0.1, 0.5, 0.9, 0.99};

  // Parameter overrides for validate, e.g. "a" or "sigma1".
  std::map<std::string, double> overrides;
  // Synthetic data controls.
  double noise = 0.0;

  std::string resolved_calibration_path() const;
};

/// Applies one setting. Unknown keys and malformed values raise ParseError
/// prefixed with `where`.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value,
                   const std::string& where = "config");

/// Parses `key = value` lines; `#` starts a comment, values may be quoted.
RunConfig parse_config(const std::string& text, const std::string& source = "config",
                       RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Stable textual form of every setting, one `key = value` per line.
std::string canonical_config(const RunConfig& config);
std::uint64_t fnv1a64(const std::string& data);

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kParse = 2,
  kInfeasible = 3,
  kNonConvergence = 4,
};

int cmd_calibrate(const RunConfig& config, std::ostream& log);
int cmd_price(const RunConfig& config, std::ostream& log);
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_validate(const RunConfig& config, std::ostream& log);
/// Writes a seeded synthetic quotes/history pair and a matching run config.
int cmd_synth(const RunConfig& config, std::ostream& log);

/// Dispatches by name and maps library errors to exit codes.
int run_command(const std::string& name, const RunConfig& config, std::ostream& log,
                std::ostream& err);

/// Bundled parameter set of the config with its `set.<name>` overrides.
ModelSpec validation_spec(const RunConfig& config, ModelKind kind);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Invariant suite behind `validate`.
std::vector<ValidationCheck> run_validation_suite(const RunConfig& config, std::ostream& log);

}  // namespace sdlevy::cli
