#pragma once

// Scenario configuration: a sectioned key = value text format.
//
//   # comment
//   [vehicle]
//   h = 0.5
//
// Every key is optional; omitted keys keep their defaults.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pshield/model.hpp"
#include "pshield/simulator.hpp"
#include "pshield/synthesis.hpp"

namespace pshield {

/// Malformed or out-of-range configuration. `line` is 0 for whole-file checks.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line) : std::runtime_error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct SynthesisSettings {
  double alpha1 = 0.95;
  double alpha2 = 0.05;
  double epsilon = 1e-3;
  double pe_max = 1e6;
  double lambda_max = -0.01;
  double grid_step = 0.05;  // a, c and reach grids; a3 and tau1 use twice this
  int refinement_rounds = 1;
  bool enforce_kd_upper = true;
  double screen_a3 = 0.5;
  double screen_tau1 = 0.1;

  std::vector<double> rate_grid() const;    // {step, 2 step, ..., 1 - step}
  std::vector<double> coarse_grid() const;  // same with doubled step
  EstimatorMonitorOptions estimator_options() const;
  ControllerOptions controller_options() const;
};

struct ScenarioConfig {
  VehicleParams vehicle;
  NoiseBounds bounds;
  SynthesisSettings synthesis;
  SimConfig simulation;
  std::string out_dir = "out";
  std::string design;           // empty: <out_dir>/design.json
  std::string baseline_design;  // used by reproduce
  std::filesystem::path base_dir;  // directory of the config file (not serialized)

  /// Relative paths in the [output] section resolve against the config file.
  std::filesystem::path resolve(const std::string& p) const;
  std::filesystem::path design_path() const;

  /// Cross-field checks; throws ConfigError.
  void validate() const;
};

ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ScenarioConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ScenarioConfig& cfg);

}  // namespace pshield
