#include "pshield/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "pshield/errors.hpp"
#include "pshield/sampling.hpp"

namespace pshield {

double LeadInput::at(long k) const {
  switch (kind) {
    case Kind::constant:
      return amplitude;
    case Kind::exp_decay:
      return amplitude * std::exp(-rate * static_cast<double>(k));
    case Kind::samples:
      if (samples.empty()) return 0.0;
      return samples[static_cast<std::size_t>(std::clamp<long>(k - 1, 0, samples.size() - 1))];
  }
  return 0.0;
}

void SimConfig::validate() const {
  if (steps < 1) throw ParameterError("steps must be at least 1");
  if (vehicles < 1) throw ParameterError("platoon needs at least one vehicle");
  if (!(noise.wd >= 0.0 && noise.wu >= 0.0 && noise.we >= 0.0 && noise.scale >= 0.0)) {
    throw ParameterError("noise half-widths must be nonnegative");
  }
  if (!(estimate_spread >= 0.0)) throw ParameterError("estimate spread must be nonnegative");
  if (attack.kind == AttackKind::stealthy_greedy &&
      !(attack.gamma >= 0.0 && attack.gamma <= 1.0)) {
    throw ParameterError("stealth margin must lie in [0,1]");
  }
  if (attack.lookahead < 1) throw ParameterError("attack lookahead must be at least 1");
  if (attack.vehicle < 0 || attack.vehicle > vehicles) {
    throw ParameterError("attacked vehicle out of range");
  }
  if (lead.kind == LeadInput::Kind::samples && lead.samples.empty()) {
    throw ParameterError("sampled lead input needs samples");
  }
  if (!x_init.allFinite()) throw ParameterError("initial state must be finite");
}

Eigen::Vector4d attack_direction(const DiscretePlant& plant, const Design& design,
                                 const Vec6& target, int lookahead) {
  const auto cl = build_closed_loop(plant, design.K);
  const auto err = build_error_dynamics(plant, design.L);
  Eigen::Matrix<double, 11, 11> j = Eigen::Matrix<double, 11, 11>::Zero();
  j.topLeftCorner<6, 6>() = cl.A;
  j.block<6, 5>(0, 6) = cl.B6;
  j.bottomRightCorner<5, 5>() = err.A;
  Eigen::Matrix<double, 11, 4> br;
  br << cl.B5, err.B_r;
  Eigen::Matrix<double, 11, 1> t = Eigen::Matrix<double, 11, 1>::Zero();
  t.head<6>() = target;
  Eigen::Vector4d g = Eigen::Vector4d::Zero();
  for (int k = 0; k < lookahead; ++k) {
    g += br.transpose() * t;
    t = (j.transpose() * t).eval();
  }
  return g;
}

Eigen::Vector2d stealthy_attack_step(const Vec5& e, const Eigen::Vector4d& w_e,
                                     const Eigen::Matrix4d& pi, const Eigen::Vector4d& g,
                                     double gamma, const DiscretePlant& plant) {
  const Eigen::Vector4d seen = plant.Ce * e + w_e;
  const Eigen::Vector4d q = plant.clean_projector() * seen;
  const Eigen::Matrix2d m = plant.Gamma.transpose() * pi * plant.Gamma;
  const Eigen::LLT<Eigen::Matrix2d> llt(m);
  if (llt.info() != Eigen::Success) throw ParameterError("monitor matrix must be positive definite");
  const Eigen::Vector2d s0 = -llt.solve(plant.Gamma.transpose() * pi * q);
  const double z_min = q.dot(pi * q) - s0.dot(m * s0);
  const Eigen::Vector2d gs = plant.Gamma.transpose() * g;

  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  if (gs.isZero(0.0)) {
    if (q.dot(pi * q) > gamma) s = s0;
  } else if (gamma - z_min < 0.0) {
    s = s0;
  } else {
    // keep a hair inside so rounding cannot tip z over gamma
    const double rho = (gamma - z_min) * (1.0 - 1e-9);
    const Eigen::Vector2d mg = llt.solve(gs);
    s = s0 + std::sqrt(rho / gs.dot(mg)) * mg;
  }
  return s - plant.GammaPinv * seen;
}

namespace {

Eigen::VectorXd clip(Eigen::VectorXd w, double bound, long& clipped) {
  const double n2 = w.squaredNorm();
  if (n2 > bound) {
    w *= std::sqrt(bound / n2);
    ++clipped;
  }
  return w;
}

}  // namespace

SimTrace simulate(const DiscretePlant& plant, const VehicleParams& params,
                  const NoiseBounds& bounds, const Design& design, const SimConfig& config) {
  config.validate();
  params.validate();
  bounds.validate();
  if (!design.L.allFinite() || !design.Pi.allFinite() || !design.K.allFinite()) {
    throw ParameterError("design matrices must be finite");
  }
  const int m = config.vehicles;
  const long n = config.steps;
  Rng rng(config.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  SimTrace trace;
  trace.vehicles = m;
  trace.steps = n;
  trace.ts = params.ts;
  trace.data.assign(static_cast<std::size_t>(m), std::vector<VehicleStep>(static_cast<std::size_t>(n)));

  std::vector<Vec5> x(m, config.x_init), xh(m);
  std::vector<double> u(m, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < 5; ++c) xh[i](c) = x[i](c) + config.estimate_spread * unit(rng);
  }

  const auto& atk = config.attack;
  Eigen::Vector4d g = Eigen::Vector4d::Zero();
  if (atk.kind == AttackKind::stealthy_greedy) {
    Vec6 t = Vec6::Zero();
    t.head<5>() = atk.target;
    g = attack_direction(plant, design, t, atk.lookahead);
  }

  double q_ref = 0.0;
  for (long k = 1; k <= n; ++k) {
    double u_prev = config.lead.at(k);
    double q_prev = q_ref;
    for (int i = 0; i < m; ++i) {
      VehicleStep& st = trace.data[i][k - 1];
      st.x = x[i];
      st.x_hat = xh[i];
      st.e = x[i] - xh[i];
      st.u = u[i];
      st.u_prev = u_prev;

      st.w_d.setZero();
      st.w_e.setZero();
      st.w_u = 0.0;
      if (config.noise.enabled) {
        Eigen::VectorXd wd(2), wu(1), we(4);
        for (int c = 0; c < 2; ++c) wd(c) = config.noise.wd * unit(rng);
        wu(0) = config.noise.wu * unit(rng);
        for (int c = 0; c < 4; ++c) we(c) = config.noise.we * unit(rng);
        if (config.validate_bounds) {
          wd = clip(wd, bounds.w1_bar, trace.clipped);
          wu = clip(wu, bounds.w2_bar, trace.clipped);
          we = clip(we, bounds.w3_bar, trace.clipped);
        }
        st.w_d = config.noise.scale * wd;
        st.w_u = config.noise.scale * wu(0);
        st.w_e = config.noise.scale * we;
      }

      st.delta.setZero();
      const bool attacked = atk.kind != AttackKind::none && k >= atk.start &&
                            (atk.vehicle == 0 || atk.vehicle == i + 1);
      if (attacked) {
        switch (atk.kind) {
          case AttackKind::random_bounded:
            st.delta << atk.magnitude * unit(rng), atk.magnitude * unit(rng);
            break;
          case AttackKind::constant:
            st.delta = atk.constant;
            break;
          case AttackKind::stealthy_greedy:
            st.delta = stealthy_attack_step(st.e, st.w_e, design.Pi, g, atk.gamma, plant);
            break;
          case AttackKind::none:
            break;
        }
      }

      st.y = plant.C * x[i] + st.w_d + st.delta;
      st.y_e = plant.Ce * x[i] + st.w_e + plant.Gamma * st.delta;
      st.r = st.y_e - plant.Ce * xh[i];
      st.z = st.r.dot(design.Pi * st.r);
      st.alarm = st.z > 1.0;

      st.gap = x[i](kSpacingError) + params.standstill + params.h * x[i](kVelocity);
      st.position = q_prev - params.length - st.gap;
      q_prev = st.position;

      const double u_next =
          plant.au * u[i] + plant.bu * (design.K.dot(st.y) + u_prev + st.w_u);
      const Vec5 x_next = plant.A * x[i] + plant.B1 * u[i] + plant.B2 * u_prev;
      const Vec5 xh_next = plant.A * xh[i] + plant.B1 * u[i] +
                           plant.B2 * (u_prev + st.w_u) + design.L * st.r;
      if (!x_next.allFinite() || x_next.cwiseAbs().maxCoeff() > 1e9 ||
          !xh_next.allFinite() || !std::isfinite(u_next)) {
        throw DivergenceError("state left the finite range at step " + std::to_string(k + 1) +
                                  " (vehicle " + std::to_string(i + 1) + ")",
                              k + 1);
      }
      u_prev = u[i];  // what vehicle i + 1 receives at step k
      x[i] = x_next;
      xh[i] = xh_next;
      u[i] = u_next;
    }
    // reference vehicle velocity v_1 + dv_1, trapezoid between samples
    const auto& s1 = trace.data[0][k - 1];
    const double v_ref = s1.x(kVelocity) + s1.x(kRelativeVelocity);
    const double v_ref_next = x[0](kVelocity) + x[0](kRelativeVelocity);
    q_ref += 0.5 * params.ts * (v_ref + v_ref_next);
  }
  return trace;
}

StringStabilityReport string_stability_report(const SimTrace& trace) {
  StringStabilityReport rep;
  const double inf = std::numeric_limits<double>::infinity();
  for (const auto& veh : trace.data) {
    double er = 0.0, v = 0.0, a = 0.0;
    const double v0 = veh.empty() ? 0.0 : veh.front().x(kVelocity);
    for (const auto& st : veh) {
      er += st.x(kSpacingError) * st.x(kSpacingError);
      v += (st.x(kVelocity) - v0) * (st.x(kVelocity) - v0);
      a += st.x(kAcceleration) * st.x(kAcceleration);
    }
    rep.norm_e_r.push_back(std::sqrt(trace.ts * er));
    rep.norm_v.push_back(std::sqrt(trace.ts * v));
    rep.norm_a.push_back(std::sqrt(trace.ts * a));
  }
  auto ratio = [inf](double num, double den) { return den > 0.0 ? num / den : inf; };
  for (std::size_t i = 1; i < trace.data.size(); ++i) {
    SignalRatios r;
    r.vehicle = static_cast<int>(i) + 1;
    r.e_r = ratio(rep.norm_e_r[i], rep.norm_e_r[i - 1]);
    r.v = ratio(rep.norm_v[i], rep.norm_v[i - 1]);
    r.a = ratio(rep.norm_a[i], rep.norm_a[i - 1]);
    rep.ratios.push_back(r);
  }
  return rep;
}

std::vector<DetectionMetrics> detection_metrics(const SimTrace& trace, long k_start) {
  std::vector<DetectionMetrics> out;
  for (std::size_t i = 0; i < trace.data.size(); ++i) {
    DetectionMetrics d;
    d.vehicle = static_cast<int>(i) + 1;
    long counted = 0;
    for (std::size_t k = 0; k < trace.data[i].size(); ++k) {
      const auto& st = trace.data[i][k];
      const long step = static_cast<long>(k) + 1;
      d.max_z = std::max(d.max_z, st.z);
      if (st.alarm && d.first_alarm == 0) d.first_alarm = step;
      if (step >= k_start) {
        ++counted;
        if (st.alarm) ++d.alarms;
      }
    }
    d.false_alarm_rate = counted > 0 ? static_cast<double>(d.alarms) / counted : 0.0;
    out.push_back(d);
  }
  return out;
}

std::vector<std::string> trace_columns() {
  std::vector<std::string> c{"vehicle", "k"};
  const char* states[] = {"e_r", "v", "a", "dv", "a_prev"};
  for (const char* s : states) c.emplace_back(s);
  for (const char* s : states) c.emplace_back(std::string(s) + "_hat");
  for (const char* s : states) c.emplace_back(std::string("err_") + s);
  for (const char* s : {"u", "u_prev", "y1", "y2", "ye1", "ye2", "ye3", "ye4", "r1", "r2", "r3",
                        "r4", "z", "alarm", "delta1", "delta2", "wd1", "wd2", "wu", "we1",
                        "we2", "we3", "we4", "gap", "position"}) {
    c.emplace_back(s);
  }
  return c;
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  const auto cols = trace_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  const auto old_prec = os.precision(17);
  for (std::size_t i = 0; i < trace.data.size(); ++i) {
    for (std::size_t k = 0; k < trace.data[i].size(); ++k) {
      const auto& s = trace.data[i][k];
      os << i + 1 << ',' << k + 1;
      auto put = [&os](const auto& v) {
        for (Eigen::Index j = 0; j < v.size(); ++j) os << ',' << v(j);
      };
      put(s.x);
      put(s.x_hat);
      put(s.e);
      os << ',' << s.u << ',' << s.u_prev;
      put(s.y);
      put(s.y_e);
      put(s.r);
      os << ',' << s.z << ',' << (s.alarm ? 1 : 0);
      put(s.delta);
      put(s.w_d);
      os << ',' << s.w_u;
      put(s.w_e);
      os << ',' << s.gap << ',' << s.position << '\n';
    }
  }
  os.precision(old_prec);
}

}  // namespace pshield
