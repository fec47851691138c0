#include "pshield/pipeline.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pshield/errors.hpp"

namespace pshield {

using nlohmann::json;

namespace {

json num(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

template <typename Derived>
json mat(const Eigen::MatrixBase<Derived>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

template <typename M>
M mat_from(const json& j, const char* what) {
  M out;
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != out.rows()) {
    throw ParameterError(std::string("design: ") + what + " has the wrong number of rows");
  }
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != out.cols()) {
      throw ParameterError(std::string("design: ") + what + " has the wrong number of columns");
    }
    for (Eigen::Index k = 0; k < out.cols(); ++k) {
      out(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  return out;
}

json verification(const sdp::VerifyReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    const char* kind = e.kind == sdp::ConstraintKind::lmi     ? "lmi"
                       : e.kind == sdp::ConstraintKind::floor ? "floor"
                                                              : "linear";
    entries.push_back({{"name", e.name}, {"kind", kind}, {"size", e.size},
                       {"min_eigenvalue", num(e.min_eigenvalue)}});
  }
  return {{"worst", num(r.worst)}, {"pass", r.pass}, {"entries", entries}};
}

json rates(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

std::filesystem::path default_baseline() {
  return std::filesystem::path(PSHIELD_DATA_DIR) / "baseline_design.json";
}

}  // namespace

// ---- design files -----------------------------------------------------------

json design_to_json(const DesignFile& d) {
  json j;
  j["source"] = d.source;
  j["L"] = mat(d.design.L);
  j["Pi"] = mat(d.design.Pi);
  j["K"] = {num(d.design.K(0)), num(d.design.K(1))};
  j["epsilon"] = num(d.epsilon);
  if (d.error) j["error_bound"] = {{"Pe", mat(d.error->Pe)}, {"alpha_inf_e", num(d.error->alpha_inf_e)}};
  if (d.monitor) {
    j["monitor_bound"] = {{"Pe", mat(d.monitor->Pe)},
                          {"c", num(d.monitor->c)},
                          {"alpha_bar_inf_e", num(d.monitor->alpha_bar_inf_e)}};
  }
  return j;
}

DesignFile design_from_json(const json& j) {
  DesignFile d;
  try {
    d.source = j.value("source", std::string("unnamed"));
    d.design.L = mat_from<Mat54>(j.at("L"), "L");
    d.design.Pi = mat_from<Eigen::Matrix4d>(j.at("Pi"), "Pi");
    const auto& k = j.at("K");
    if (!k.is_array() || k.size() != 2) throw ParameterError("design: K must have two entries");
    d.design.K = Gain(k[0].get<double>(), k[1].get<double>());
    d.epsilon = j.value("epsilon", 1e-3);
    if (j.contains("error_bound")) {
      const auto& e = j["error_bound"];
      d.error = ErrorBound{mat_from<Mat5>(e.at("Pe"), "error_bound.Pe"),
                           e.at("alpha_inf_e").get<double>()};
    }
    if (j.contains("monitor_bound")) {
      const auto& m = j["monitor_bound"];
      d.monitor = MonitorBound{mat_from<Mat5>(m.at("Pe"), "monitor_bound.Pe"),
                               m.at("c").get<double>(), m.at("alpha_bar_inf_e").get<double>()};
    }
  } catch (const json::exception& e) {
    throw ParameterError(std::string("design: ") + e.what());
  }
  if (!(d.epsilon > 0.0)) throw ParameterError("design: epsilon must be positive");
  return d;
}

DesignFile load_design(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("design file not found: " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ParameterError("design file " + path.string() + ": " + e.what());
  }
  return design_from_json(j);
}

// ---- pipelines --------------------------------------------------------------

SynthesisRun run_synthesis(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto plant = build_plant(cfg.vehicle);
  SynthesisRun run;
  run.estimator = synthesize_estimator_monitor(plant, cfg.bounds, cfg.synthesis.estimator_options());
  const auto& em = run.estimator;
  run.controller = synthesize_controller(plant, cfg.vehicle, cfg.bounds, em.Pi, em.Pe,
                                         em.alpha_inf_e, cfg.synthesis.controller_options());
  auto& d = run.design;
  d.source = "synthesized";
  d.design = Design{em.L, em.Pi, run.controller.K};
  d.epsilon = cfg.synthesis.epsilon;
  d.error = ErrorBound{em.Pe, em.alpha_inf_e};
  d.monitor = MonitorBound{em.Pe, em.c, em.alpha_bar_inf_e};
  return run;
}

AssessmentRun run_assessment(const ScenarioConfig& cfg, const DesignFile& design) {
  cfg.validate();
  const auto plant = build_plant(cfg.vehicle);
  const auto grid = cfg.synthesis.rate_grid();
  AssessmentRun run;
  if (design.error) {
    run.error = *design.error;
  } else {
    run.error_certificate = certify_error(plant, cfg.bounds, design.design.L, design.design.Pi, grid);
    run.error = ErrorBound{run.error_certificate->Pe, run.error_certificate->alpha_inf_e};
    run.error_certified_here = true;
  }
  const auto cl = build_closed_loop(plant, design.design.K);
  run.reach = reach_ellipsoid(cl, cfg.bounds, design.design.Pi, run.error.Pe, run.error.alpha_inf_e,
                              design.epsilon, grid, cfg.synthesis.refinement_rounds);
  run.projection = project_to_state(run.reach.P, run.reach.alpha_inf);
  run.verdict = assess(run.projection.Px, run.projection.alpha,
                       CriticalStates::for_vehicle(cfg.vehicle));
  return run;
}

SimulationRun run_simulation(const ScenarioConfig& cfg, const DesignFile& design) {
  cfg.validate();
  const auto plant = build_plant(cfg.vehicle);
  SimulationRun run;
  run.trace = simulate(plant, cfg.vehicle, cfg.bounds, design.design, cfg.simulation);
  if (design.monitor) {
    const auto& m = *design.monitor;
    for (const auto& veh : run.trace.data) {
      const Vec5 e1 = veh.front().e;
      run.k_bar = std::max<long>(
          run.k_bar, k_bar_star(m.c, e1.dot(m.Pe * e1), m.alpha_bar_inf_e, design.epsilon));
    }
  }
  run.detection = detection_metrics(run.trace, run.k_bar);
  if (run.trace.vehicles >= 2) run.string_stability = string_stability_report(run.trace);
  for (const auto& veh : run.trace.data) {
    for (const auto& st : veh) run.collisions += st.gap < 0.0 ? 1 : 0;
  }
  return run;
}

ReproduceRun run_reproduce(const ScenarioConfig& cfg) {
  ReproduceRun run;
  const auto path = cfg.baseline_design.empty() ? default_baseline() : cfg.resolve(cfg.baseline_design);
  run.baseline_design = load_design(path);
  run.synthesis = run_synthesis(cfg);
  run.synthesized = run_assessment(cfg, run.synthesis.design);
  run.baseline = run_assessment(cfg, run.baseline_design);
  run.synthesized_sign_ok = run.synthesized.verdict.d_inf > 0.0;
  run.baseline_sign_ok = run.baseline.verdict.d_inf < 0.0 && std::abs(run.baseline.verdict.d_inf) > 100.0;
  return run;
}

// ---- reports ----------------------------------------------------------------

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

json report_header(const ScenarioConfig& cfg, const std::string& command) {
  const std::string text = serialize_config(cfg);
  return {{"tool", "platoon-shield"},
          {"version", kToolVersion},
          {"command", command},
          {"config", text},
          {"config_sha256", sha256_hex(text)}};
}

namespace {

json estimator_json(const EstimatorMonitorResult& em) {
  return {{"grid_winner",
           {{"a", em.a}, {"c", em.c}, {"a3", em.a3}, {"tau1", em.tau1}}},
          {"a1", num(em.a1)}, {"a2", num(em.a2)}, {"c1", num(em.c1)}, {"c2", num(em.c2)},
          {"tau2", num(em.tau2)},
          {"alpha_inf_e", num(em.alpha_inf_e)},
          {"alpha_bar_inf_e", num(em.alpha_bar_inf_e)},
          {"objective", num(em.objective)},
          {"grid_points", em.grid_points},
          {"tolerance_feasible", em.tolerance_feasible},
          {"L", mat(em.L)}, {"Pi", mat(em.Pi)}, {"Pe", mat(em.Pe)},
          {"verification", verification(em.verification)}};
}

json controller_json(const ControllerResult& c, const ScenarioConfig& cfg) {
  json eig = json::array();
  const auto ev = eig_Ae(c.K, cfg.vehicle.tau);
  double max_re = -std::numeric_limits<double>::infinity();
  double max_res = 0.0;
  for (int i = 0; i < 3; ++i) {
    eig.push_back({num(ev(i).real()), num(ev(i).imag())});
    max_re = std::max(max_re, ev(i).real());
    max_res = std::max(max_res, ae_char_residual(c.K, cfg.vehicle.tau, ev(i)));
  }
  return {{"K", {num(c.K(0)), num(c.K(1))}},
          {"K_tilde", {num(c.K_tilde(0)), num(c.K_tilde(1))}},
          {"x_tilde", num(c.x_tilde)},
          {"grid_winner", {{"a", c.a}}},
          {"a_i", rates(c.a_i)},
          {"lambda_max", num(c.lambda_max)},
          {"alpha_inf_zeta", num(c.alpha_inf_zeta)},
          {"objective", num(c.objective)},
          {"tolerance_feasible", c.tolerance_feasible},
          {"P_zeta", mat(c.Pzeta)},
          {"verification", verification(c.verification)},
          {"gain_checks",
           {{"violations", controller_gain_violations(c.K, cfg.vehicle.tau, c.lambda_max,
                                                      cfg.synthesis.enforce_kd_upper)},
            {"eig_Ae", eig},
            {"max_real_part", num(max_re)},
            {"max_char_residual", num(max_res)}}}};
}

json verdict_json(const SafetyVerdict& v) {
  json dist = json::array();
  for (const auto& d : v.distances) {
    dist.push_back({{"name", d.name},
                    {"formula", num(d.scaled)},
                    {"oracle", num(d.oracle)},
                    {"sign_disagreement", d.sign_disagreement}});
  }
  return {{"d_inf", num(v.d_inf)},
          {"d_inf_oracle", num(v.d_inf_oracle)},
          {"distances", dist},
          {"verdict", v.resilient ? "resilient" : "at-risk"},
          {"sign_disagreement", v.sign_disagreement},
          {"alpha_inf", num(v.alpha_inf)},
          {"P_x", mat(v.Px)}};
}

json assessment_json(const DesignFile& d, const AssessmentRun& run) {
  json j;
  j["design_source"] = d.source;
  j["design"] = design_to_json(d);
  json err = {{"Pe", mat(run.error.Pe)},
              {"alpha_inf_e", num(run.error.alpha_inf_e)},
              {"certified_here", run.error_certified_here}};
  if (run.error_certificate) {
    const auto& ec = *run.error_certificate;
    err["grid_winner"] = {{"a", ec.a}};
    err["a_i"] = rates({ec.a1, ec.a2, ec.a3});
    err["tolerance_feasible"] = ec.tolerance_feasible;
    err["verification"] = verification(ec.verification);
  }
  j["error_certificate"] = err;
  j["reach_certificate"] = {{"grid_winner", {{"a", run.reach.a}}},
                            {"a_i", rates(run.reach.a_i)},
                            {"alpha_inf", num(run.reach.alpha_inf)},
                            {"objective", num(run.reach.objective)},
                            {"tolerance_feasible", run.reach.tolerance_feasible},
                            {"P_zeta", mat(run.reach.P)},
                            {"verification", verification(run.reach.verification)}};
  j["safety"] = verdict_json(run.verdict);
  return j;
}

}  // namespace

json synthesis_report(const ScenarioConfig& cfg, const SynthesisRun& run) {
  json j = report_header(cfg, "synthesize");
  j["estimator_monitor"] = estimator_json(run.estimator);
  j["controller"] = controller_json(run.controller, cfg);
  j["design"] = design_to_json(run.design);
  return j;
}

json assessment_report(const ScenarioConfig& cfg, const DesignFile& d, const AssessmentRun& run) {
  json j = report_header(cfg, "assess");
  j.update(assessment_json(d, run));
  return j;
}

json simulation_report(const ScenarioConfig& cfg, const DesignFile& d, const SimulationRun& run) {
  json j = report_header(cfg, "simulate");
  j["design_source"] = d.source;
  j["steps"] = run.trace.steps;
  j["vehicles"] = run.trace.vehicles;
  j["k_bar_star"] = run.k_bar;
  j["k_bar_star_source"] = d.monitor ? "monitor certificate" : "none (counted from step 1)";
  j["clipped_noise_draws"] = run.trace.clipped;
  j["collision_samples"] = run.collisions;
  json det = json::array();
  for (const auto& m : run.detection) {
    det.push_back({{"vehicle", m.vehicle},
                   {"alarms_after_k_bar", m.alarms},
                   {"false_alarm_rate", num(m.false_alarm_rate)},
                   {"max_z", num(m.max_z)},
                   {"first_alarm", m.first_alarm}});
  }
  j["detection"] = det;
  if (run.string_stability) {
    const auto& s = *run.string_stability;
    json ratios = json::array();
    for (const auto& r : s.ratios) {
      ratios.push_back({{"vehicle", r.vehicle}, {"e_r", num(r.e_r)}, {"v", num(r.v)}, {"a", num(r.a)}});
    }
    j["string_stability"] = {{"norm_e_r", rates(s.norm_e_r)},
                             {"norm_v", rates(s.norm_v)},
                             {"norm_a", rates(s.norm_a)},
                             {"ratios", ratios}};
  }
  return j;
}

json reproduce_report(const ScenarioConfig& cfg, const ReproduceRun& run) {
  json j = report_header(cfg, "reproduce");
  j["synthesis"] = {{"estimator_monitor", estimator_json(run.synthesis.estimator)},
                    {"controller", controller_json(run.synthesis.controller, cfg)}};
  j["synthesized"] = assessment_json(run.synthesis.design, run.synthesized);
  j["baseline"] = assessment_json(run.baseline_design, run.baseline);
  j["checks"] = {{"synthesized_d_inf_positive", run.synthesized_sign_ok},
                 {"baseline_d_inf_below_minus_100", run.baseline_sign_ok},
                 {"pass", run.pass()}};
  return j;
}

std::string reproduce_table(const ReproduceRun& run) {
  std::ostringstream os;
  auto row = [&os](const char* name, const SafetyVerdict& v, const char* expected, bool ok) {
    os << std::left << std::setw(13) << name << std::right << std::setw(16)
       << std::setprecision(6) << v.d_inf << std::setw(16) << v.d_inf_oracle << "  "
       << std::left << std::setw(10) << (v.resilient ? "resilient" : "at-risk")
       << std::setw(12) << expected << (ok ? "ok" : "MISMATCH") << '\n';
  };
  os << std::left << std::setw(13) << "design" << std::right << std::setw(16) << "d_inf"
     << std::setw(16) << "d_inf (oracle)" << "  " << std::left << std::setw(10) << "verdict"
     << std::setw(12) << "expected" << "check\n";
  row("synthesized", run.synthesized.verdict, "> 0", run.synthesized_sign_ok);
  row("baseline", run.baseline.verdict, "< -100", run.baseline_sign_ok);
  return os.str();
}

std::string trace_format_help() {
  std::ostringstream os;
  os << "trace.csv: one row per (vehicle, step), header row first, comma separated.\n"
        "Values are printed with 17 significant digits.\n\n";
  const std::vector<std::pair<std::string, std::string>> doc = {
      {"vehicle", "vehicle index i (1-based; vehicle 1 follows the reference vehicle)"},
      {"k", "sample index (1-based)"},
      {"e_r v a dv a_prev", "true state x_i(k): spacing error, velocity, acceleration, "
                            "relative velocity, predecessor acceleration"},
      {"*_hat", "estimate x_hat_i(k), same order"},
      {"err_*", "estimation error e_i(k) = x_i(k) - x_hat_i(k)"},
      {"u", "filtered control input u_i(k)"},
      {"u_prev", "predecessor command received over the channel (without noise)"},
      {"y1 y2", "radar outputs including noise and attack"},
      {"ye1..ye4", "estimator sensor outputs [e_r, v, a, dv] including noise and attack"},
      {"r1..r4", "residual r_i(k) = y_e - Ce x_hat"},
      {"z", "detector statistic r' Pi r"},
      {"alarm", "1 when z > 1"},
      {"delta1 delta2", "injected sensor attack"},
      {"wd1 wd2 wu we1..we4", "sampled radar, channel and sensor noise"},
      {"gap", "inter-vehicle distance e_r + s + h v (negative means collision)"},
      {"position", "reconstructed absolute position (reference vehicle starts at 0)"},
  };
  for (const auto& [c, d] : doc) os << "  " << std::left << std::setw(22) << c << d << '\n';
  os << "\nColumn order:";
  for (const auto& c : trace_columns()) os << ' ' << c;
  os << '\n';
  return os.str();
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace pshield
