#pragma once

// Model -> synthesize -> assess -> simulate, with JSON reports.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pshield/assessment.hpp"
#include "pshield/scenario.hpp"
#include "pshield/simulator.hpp"
#include "pshield/synthesis.hpp"

namespace pshield {

inline constexpr const char* kToolVersion = "0.1.0";

/// A required input file (design, baseline) is absent or unreadable.
class MissingInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ErrorBound {
  Mat5 Pe;
  double alpha_inf_e = 0.0;
};

struct MonitorBound {
  Mat5 Pe;  // clean-error ellipsoid shape
  double c = 0.0;
  double alpha_bar_inf_e = 0.0;
};

struct DesignFile {
  std::string source;
  Design design;
  double epsilon = 1e-3;
  std::optional<ErrorBound> error;      // attacked-error certificate, if known
  std::optional<MonitorBound> monitor;  // clean-error certificate, if known
};

DesignFile load_design(const std::filesystem::path& path);
nlohmann::json design_to_json(const DesignFile& d);
DesignFile design_from_json(const nlohmann::json& j);

struct SynthesisRun {
  EstimatorMonitorResult estimator;
  ControllerResult controller;
  DesignFile design;
};

SynthesisRun run_synthesis(const ScenarioConfig& cfg);

struct AssessmentRun {
  ErrorBound error;
  bool error_certified_here = false;
  std::optional<ErrorCertificate> error_certificate;
  ReachCertificateZeta reach;
  StateProjection projection;
  SafetyVerdict verdict;
};

/// Certifies the attacked error first when the design carries no error bound.
AssessmentRun run_assessment(const ScenarioConfig& cfg, const DesignFile& design);

struct SimulationRun {
  SimTrace trace;
  long k_bar = 1;
  std::vector<DetectionMetrics> detection;
  std::optional<StringStabilityReport> string_stability;
  long collisions = 0;  // samples with a negative gap
};

SimulationRun run_simulation(const ScenarioConfig& cfg, const DesignFile& design);

struct ReproduceRun {
  SynthesisRun synthesis;
  AssessmentRun synthesized;
  AssessmentRun baseline;
  DesignFile baseline_design;
  bool synthesized_sign_ok = false;
  bool baseline_sign_ok = false;
  bool pass() const { return synthesized_sign_ok && baseline_sign_ok; }
};

ReproduceRun run_reproduce(const ScenarioConfig& cfg);

// ---- reports ---------------------------------------------------------------

std::string sha256_hex(const std::string& data);

/// Tool name/version plus the resolved config text and its digest.
nlohmann::json report_header(const ScenarioConfig& cfg, const std::string& command);
nlohmann::json synthesis_report(const ScenarioConfig& cfg, const SynthesisRun& run);
nlohmann::json assessment_report(const ScenarioConfig& cfg, const DesignFile& d,
                                 const AssessmentRun& run);
nlohmann::json simulation_report(const ScenarioConfig& cfg, const DesignFile& d,
                                 const SimulationRun& run);
nlohmann::json reproduce_report(const ScenarioConfig& cfg, const ReproduceRun& run);
/// Plain-text comparison of the two verdicts.
std::string reproduce_table(const ReproduceRun& run);

/// Column documentation for `--help trace-format`.
std::string trace_format_help();

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace pshield
