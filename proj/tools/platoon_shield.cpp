#include <CLI11.hpp>

#include <chrono>
#include <cstring>
#include <fstream>
#include <iostream>

#include "pshield/errors.hpp"
#include "pshield/pipeline.hpp"

using namespace pshield;

namespace {

enum Exit { kOk = 0, kConfig = 1, kInfeasible = 2, kDivergence = 3, kCheckFailed = 4 };

struct Args {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> grid_step;
};

ScenarioConfig resolve(const Args& a) {
  ScenarioConfig cfg = load_config(a.config);
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.seed) cfg.simulation.seed = *a.seed;
  if (a.grid_step) {
    if (!(*a.grid_step > 0.0 && *a.grid_step < 0.25)) {
      throw ConfigError("--grid-step must lie in (0,0.25)", 0);
    }
    cfg.synthesis.grid_step = *a.grid_step;
  }
  cfg.validate();
  return cfg;
}

double since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

int cmd_synthesize(const ScenarioConfig& cfg) {
  const auto t = std::chrono::steady_clock::now();
  const auto run = run_synthesis(cfg);
  const std::filesystem::path out(cfg.out_dir);
  write_json(out / "design.json", design_to_json(run.design));
  write_json(out / "synthesis_report.json", synthesis_report(cfg, run));
  std::cout << "estimator/monitor: a=" << run.estimator.a << " c=" << run.estimator.c
            << " a3=" << run.estimator.a3 << " tau1=" << run.estimator.tau1 << " ("
            << run.estimator.grid_points << " grid points)\n"
            << "controller: K = [" << run.controller.K(0) << ", " << run.controller.K(1)
            << "] at a=" << run.controller.a << '\n'
            << "wrote " << (out / "design.json").string() << " in " << since(t) << " s\n";
  return kOk;
}

int cmd_assess(const ScenarioConfig& cfg) {
  const auto design = load_design(cfg.design_path());
  const auto run = run_assessment(cfg, design);
  const std::filesystem::path out(cfg.out_dir);
  write_json(out / "assessment_report.json", assessment_report(cfg, design, run));
  const auto& v = run.verdict;
  std::cout << design.source << ": d_inf = " << v.d_inf << " (oracle " << v.d_inf_oracle
            << ") -> " << (v.resilient ? "resilient" : "at-risk") << '\n';
  for (const auto& d : v.distances) {
    std::cout << "  " << d.name << ": " << d.scaled << " (oracle " << d.oracle << ")"
              << (d.sign_disagreement ? "  [sign disagreement]" : "") << '\n';
  }
  return kOk;
}

int cmd_simulate(const ScenarioConfig& cfg) {
  const auto design = load_design(cfg.design_path());
  const auto run = run_simulation(cfg, design);
  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  {
    std::ofstream csv(out / "trace.csv");
    write_trace_csv(csv, run.trace);
  }
  write_json(out / "simulation_report.json", simulation_report(cfg, design, run));
  for (const auto& m : run.detection) {
    std::cout << "vehicle " << m.vehicle << ": alarms after k=" << run.k_bar << ": " << m.alarms
              << ", max z " << m.max_z << '\n';
  }
  if (run.string_stability) {
    for (const auto& r : run.string_stability->ratios) {
      std::cout << "vehicle " << r.vehicle << " e_r norm ratio " << r.e_r << '\n';
    }
  }
  return kOk;
}

int cmd_reproduce(const ScenarioConfig& cfg) {
  const auto t = std::chrono::steady_clock::now();
  const auto run = run_reproduce(cfg);
  const std::filesystem::path out(cfg.out_dir);
  write_json(out / "design.json", design_to_json(run.synthesis.design));
  write_json(out / "reproduce_report.json", reproduce_report(cfg, run));
  std::cout << reproduce_table(run) << "elapsed " << since(t) << " s\n";
  if (!run.pass()) {
    std::cerr << "reproduce: sign check failed";
    if (!run.synthesized_sign_ok) {
      std::cerr << "; synthesized d_inf = " << run.synthesized.verdict.d_inf << " (want > 0)";
    }
    if (!run.baseline_sign_ok) {
      std::cerr << "; baseline d_inf = " << run.baseline.verdict.d_inf << " (want < -100)";
    }
    std::cerr << '\n';
    return kCheckFailed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::strcmp(argv[i], "--help") == 0 && std::strcmp(argv[i + 1], "trace-format") == 0) {
      std::cout << trace_format_help();
      return kOk;
    }
  }

  CLI::App app{"Attack-resilient platoon synthesis and assessment"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 ok, 1 config, 2 infeasible or missing input, 3 divergence,\n"
             "4 reproduce check failed. PLATOON_SHIELD_THREADS caps grid-search workers.\n"
             "See `--help trace-format` for the CSV columns.");
  Args args;
  const std::pair<const char*, const char*> commands[] = {
      {"synthesize", "Synthesize estimator, monitor and controller gains"},
      {"assess", "Certify the stealthy reachable set of a design and its distance to danger"},
      {"simulate", "Simulate the platoon with the configured attack"},
      {"reproduce", "Synthesize, then compare the synthesized and baseline designs"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "Scenario config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "Output directory (overrides [output] dir)");
    sub->add_option("--seed", args.seed, "Simulation seed");
    sub->add_option("--grid-step", args.grid_step, "Spacing of the scalar grids");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const ScenarioConfig cfg = resolve(args);
    if (cmd == "synthesize") return cmd_synthesize(cfg);
    if (cmd == "assess") return cmd_assess(cfg);
    if (cmd == "simulate") return cmd_simulate(cfg);
    return cmd_reproduce(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const MissingInputError& e) {
    std::cerr << "missing input: " << e.what() << '\n';
    return kInfeasible;
  } catch (const CertificateError& e) {
    std::cerr << "certificate error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
}
