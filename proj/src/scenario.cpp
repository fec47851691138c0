#include "pshield/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pshield/errors.hpp"
#include "pshield/grid.hpp"

namespace pshield {

std::vector<double> SynthesisSettings::rate_grid() const {
  return sdp::linspace_step(grid_step, 1.0 - grid_step, grid_step);
}

std::vector<double> SynthesisSettings::coarse_grid() const {
  return sdp::linspace_step(2.0 * grid_step, 1.0 - 2.0 * grid_step, 2.0 * grid_step);
}

EstimatorMonitorOptions SynthesisSettings::estimator_options() const {
  EstimatorMonitorOptions o;
  o.alpha1 = alpha1;
  o.alpha2 = alpha2;
  o.epsilon = epsilon;
  o.pe_max = pe_max;
  o.a_values = rate_grid();
  o.c_values = rate_grid();
  o.a3_values = coarse_grid();
  o.tau1_values = coarse_grid();
  o.screen_a3 = screen_a3;
  o.screen_tau1 = screen_tau1;
  o.refinement_rounds = refinement_rounds;
  return o;
}

ControllerOptions SynthesisSettings::controller_options() const {
  ControllerOptions o;
  o.lambda_max = lambda_max;
  o.epsilon = epsilon;
  o.enforce_kd_upper = enforce_kd_upper;
  o.a_values = rate_grid();
  o.refinement_rounds = refinement_rounds;
  return o;
}

std::filesystem::path ScenarioConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

std::filesystem::path ScenarioConfig::design_path() const {
  return design.empty() ? std::filesystem::path(out_dir) / "design.json" : resolve(design);
}

void ScenarioConfig::validate() const {
  try {
    vehicle.validate();
    bounds.validate();
    check_decay_preconditions(vehicle.tau, synthesis.lambda_max);
    synthesis.estimator_options().validate();
    simulation.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("config: ") + e.what(), 0);
  }
}

namespace {

// ---- value codecs ---------------------------------------------------------

struct BadValue {
  std::string why;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_number(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw BadValue{"expected a finite number, got '" + s + "'"};
  }
  return v;
}

long to_integer(const std::string& s) {
  long v = 0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw BadValue{"expected an integer, got '" + s + "'"};
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "off" || s == "no" || s == "0") return false;
  throw BadValue{"expected true/false, got '" + s + "'"};
}

std::vector<double> to_list(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_number(item));
  }
  return out;
}

template <typename Vec>
Vec to_vector(const std::string& s) {
  const auto v = to_list(s);
  if (static_cast<Eigen::Index>(v.size()) != Vec::RowsAtCompileTime) {
    throw BadValue{"expected " + std::to_string(Vec::RowsAtCompileTime) + " comma-separated numbers"};
  }
  Vec out;
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt_list(const double* v, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

double positive(double v) {
  if (!(v > 0.0)) throw BadValue{"must be positive"};
  return v;
}
double nonnegative(double v) {
  if (!(v >= 0.0)) throw BadValue{"must be nonnegative"};
  return v;
}
double open_unit(double v) {
  if (!(v > 0.0 && v < 1.0)) throw BadValue{"must lie in (0,1)"};
  return v;
}
double closed_unit(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw BadValue{"must lie in [0,1]"};
  return v;
}

const char* lead_name(LeadInput::Kind k) {
  switch (k) {
    case LeadInput::Kind::constant: return "constant";
    case LeadInput::Kind::exp_decay: return "exp_decay";
    case LeadInput::Kind::samples: return "samples";
  }
  return "";
}

const char* attack_name(AttackKind k) {
  switch (k) {
    case AttackKind::none: return "none";
    case AttackKind::random_bounded: return "random_bounded";
    case AttackKind::constant: return "constant";
    case AttackKind::stealthy_greedy: return "stealthy_greedy";
  }
  return "";
}

// ---- key table ------------------------------------------------------------

struct Field {
  std::string section;
  std::string key;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

#define NUM(sec, name, member, check)                                                    \
  Field{sec, name, [](ScenarioConfig& c, const std::string& s) { c.member = check(to_number(s)); }, \
        [](const ScenarioConfig& c) { return fmt(c.member); }}

double any(double v) { return v; }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      NUM("vehicle", "h", vehicle.h, positive),
      NUM("vehicle", "tau", vehicle.tau, positive),
      NUM("vehicle", "ts", vehicle.ts, positive),
      NUM("vehicle", "standstill", vehicle.standstill, positive),
      NUM("vehicle", "length", vehicle.length, nonnegative),
      NUM("vehicle", "v_max", vehicle.v_max, positive),

      NUM("noise", "u_bar", bounds.u_bar, positive),
      NUM("noise", "w1_bar", bounds.w1_bar, positive),
      NUM("noise", "w2_bar", bounds.w2_bar, positive),
      NUM("noise", "w3_bar", bounds.w3_bar, positive),

      NUM("synthesis", "alpha1", synthesis.alpha1, closed_unit),
      NUM("synthesis", "alpha2", synthesis.alpha2, closed_unit),
      NUM("synthesis", "epsilon", synthesis.epsilon, positive),
      NUM("synthesis", "pe_max", synthesis.pe_max, positive),
      Field{"synthesis", "lambda_max",
            [](ScenarioConfig& c, const std::string& s) {
              const double v = to_number(s);
              if (!(v < 0.0)) throw BadValue{"decay bound must be negative"};
              c.synthesis.lambda_max = v;
            },
            [](const ScenarioConfig& c) { return fmt(c.synthesis.lambda_max); }},
      Field{"synthesis", "grid_step",
            [](ScenarioConfig& c, const std::string& s) {
              const double v = to_number(s);
              if (!(v > 0.0 && v < 0.25)) throw BadValue{"must lie in (0,0.25)"};
              c.synthesis.grid_step = v;
            },
            [](const ScenarioConfig& c) { return fmt(c.synthesis.grid_step); }},
      Field{"synthesis", "refinement_rounds",
            [](ScenarioConfig& c, const std::string& s) {
              const long v = to_integer(s);
              if (v < 0 || v > 10) throw BadValue{"must lie in 0..10"};
              c.synthesis.refinement_rounds = static_cast<int>(v);
            },
            [](const ScenarioConfig& c) { return std::to_string(c.synthesis.refinement_rounds); }},
      Field{"synthesis", "enforce_kd_upper",
            [](ScenarioConfig& c, const std::string& s) { c.synthesis.enforce_kd_upper = to_bool(s); },
            [](const ScenarioConfig& c) {
              return std::string(c.synthesis.enforce_kd_upper ? "true" : "false");
            }},
      NUM("synthesis", "screen_a3", synthesis.screen_a3, open_unit),
      NUM("synthesis", "screen_tau1", synthesis.screen_tau1, positive),

      Field{"simulation", "steps",
            [](ScenarioConfig& c, const std::string& s) {
              const long v = to_integer(s);
              if (v < 1) throw BadValue{"must be at least 1"};
              c.simulation.steps = v;
            },
            [](const ScenarioConfig& c) { return std::to_string(c.simulation.steps); }},
      Field{"simulation", "seed",
            [](ScenarioConfig& c, const std::string& s) {
              std::uint64_t v = 0;
              const char* end = s.data() + s.size();
              const auto [ptr, ec] = std::from_chars(s.data(), end, v);
              if (ec != std::errc() || ptr != end) throw BadValue{"expected an unsigned integer"};
              c.simulation.seed = v;
            },
            [](const ScenarioConfig& c) { return std::to_string(c.simulation.seed); }},
      Field{"simulation", "vehicles",
            [](ScenarioConfig& c, const std::string& s) {
              const long v = to_integer(s);
              if (v < 1 || v > 1000) throw BadValue{"must lie in 1..1000"};
              c.simulation.vehicles = static_cast<int>(v);
            },
            [](const ScenarioConfig& c) { return std::to_string(c.simulation.vehicles); }},
      Field{"simulation", "lead",
            [](ScenarioConfig& c, const std::string& s) {
              for (auto k : {LeadInput::Kind::constant, LeadInput::Kind::exp_decay,
                             LeadInput::Kind::samples}) {
                if (s == lead_name(k)) {
                  c.simulation.lead.kind = k;
                  return;
                }
              }
              throw BadValue{"expected constant, exp_decay or samples"};
            },
            [](const ScenarioConfig& c) { return std::string(lead_name(c.simulation.lead.kind)); }},
      NUM("simulation", "lead_amplitude", simulation.lead.amplitude, any),
      NUM("simulation", "lead_rate", simulation.lead.rate, nonnegative),
      Field{"simulation", "lead_samples",
            [](ScenarioConfig& c, const std::string& s) { c.simulation.lead.samples = to_list(s); },
            [](const ScenarioConfig& c) {
              return fmt_list(c.simulation.lead.samples.data(), c.simulation.lead.samples.size());
            }},
      Field{"simulation", "noise",
            [](ScenarioConfig& c, const std::string& s) { c.simulation.noise.enabled = to_bool(s); },
            [](const ScenarioConfig& c) {
              return std::string(c.simulation.noise.enabled ? "on" : "off");
            }},
      NUM("simulation", "wd", simulation.noise.wd, nonnegative),
      NUM("simulation", "wu", simulation.noise.wu, nonnegative),
      NUM("simulation", "we", simulation.noise.we, nonnegative),
      NUM("simulation", "noise_scale", simulation.noise.scale, nonnegative),
      Field{"simulation", "clip_noise",
            [](ScenarioConfig& c, const std::string& s) { c.simulation.validate_bounds = to_bool(s); },
            [](const ScenarioConfig& c) {
              return std::string(c.simulation.validate_bounds ? "true" : "false");
            }},
      Field{"simulation", "x_init",
            [](ScenarioConfig& c, const std::string& s) { c.simulation.x_init = to_vector<Vec5>(s); },
            [](const ScenarioConfig& c) { return fmt_list(c.simulation.x_init.data(), 5); }},
      NUM("simulation", "estimate_spread", simulation.estimate_spread, nonnegative),

      Field{"attack", "kind",
            [](ScenarioConfig& c, const std::string& s) {
              for (auto k : {AttackKind::none, AttackKind::random_bounded, AttackKind::constant,
                             AttackKind::stealthy_greedy}) {
                if (s == attack_name(k)) {
                  c.simulation.attack.kind = k;
                  return;
                }
              }
              throw BadValue{"expected none, random_bounded, constant or stealthy_greedy"};
            },
            [](const ScenarioConfig& c) {
              return std::string(attack_name(c.simulation.attack.kind));
            }},
      Field{"attack", "vehicle",
            [](ScenarioConfig& c, const std::string& s) {
              const long v = to_integer(s);
              if (v < 0) throw BadValue{"must be nonnegative (0 = all vehicles)"};
              c.simulation.attack.vehicle = static_cast<int>(v);
            },
            [](const ScenarioConfig& c) { return std::to_string(c.simulation.attack.vehicle); }},
      Field{"attack", "start",
            [](ScenarioConfig& c, const std::string& s) {
              const long v = to_integer(s);
              if (v < 1) throw BadValue{"must be at least 1"};
              c.simulation.attack.start = v;
            },
            [](const ScenarioConfig& c) { return std::to_string(c.simulation.attack.start); }},
      NUM("attack", "gamma", simulation.attack.gamma, closed_unit),
      Field{"attack", "lookahead",
            [](ScenarioConfig& c, const std::string& s) {
              const long v = to_integer(s);
              if (v < 1 || v > 10000) throw BadValue{"must lie in 1..10000"};
              c.simulation.attack.lookahead = static_cast<int>(v);
            },
            [](const ScenarioConfig& c) { return std::to_string(c.simulation.attack.lookahead); }},
      Field{"attack", "target",
            [](ScenarioConfig& c, const std::string& s) {
              c.simulation.attack.target = to_vector<Vec5>(s);
            },
            [](const ScenarioConfig& c) { return fmt_list(c.simulation.attack.target.data(), 5); }},
      Field{"attack", "constant",
            [](ScenarioConfig& c, const std::string& s) {
              c.simulation.attack.constant = to_vector<Eigen::Vector2d>(s);
            },
            [](const ScenarioConfig& c) {
              return fmt_list(c.simulation.attack.constant.data(), 2);
            }},
      NUM("attack", "magnitude", simulation.attack.magnitude, nonnegative),

      Field{"output", "dir", [](ScenarioConfig& c, const std::string& s) { c.out_dir = s; },
            [](const ScenarioConfig& c) { return c.out_dir; }},
      Field{"output", "design", [](ScenarioConfig& c, const std::string& s) { c.design = s; },
            [](const ScenarioConfig& c) { return c.design; }},
      Field{"output", "baseline_design",
            [](ScenarioConfig& c, const std::string& s) { c.baseline_design = s; },
            [](const ScenarioConfig& c) { return c.baseline_design; }},
  };
  return f;
}

#undef NUM

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
  ScenarioConfig cfg;
  std::map<std::pair<std::string, std::string>, const Field*> table;
  std::map<std::string, bool> sections;
  for (const auto& f : fields()) {
    table[{f.section, f.key}] = &f;
    sections[f.section] = true;
  }
  std::map<std::pair<std::string, std::string>, int> seen;

  auto fail = [&](int line, const std::string& msg) -> ConfigError {
    return ConfigError(origin + ":" + std::to_string(line) + ": " + msg, line);
  };

  std::istringstream is(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string s = raw;
    if (const auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw fail(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!sections.count(section)) throw fail(line, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw fail(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty()) throw fail(line, "key '" + key + "' outside any section");
    const auto it = table.find({section, key});
    if (it == table.end()) throw fail(line, "unknown key '" + key + "' in [" + section + "]");
    if (const auto prev = seen.find({section, key}); prev != seen.end()) {
      throw fail(line, "duplicate key '" + key + "' (first set on line " +
                           std::to_string(prev->second) + ")");
    }
    seen[{section, key}] = line;
    try {
      it->second->set(cfg, value);
    } catch (const BadValue& b) {
      throw fail(line, section + "." + key + ": " + b.why);
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what(), 0);
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  ScenarioConfig cfg = parse_config(ss.str(), path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    const std::string v = f.get(cfg);
    if (v.empty()) continue;  // empty strings and lists keep their defaults
    os << f.key << " = " << v << '\n';
  }
  return os.str();
}

}  // namespace pshield
