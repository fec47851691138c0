#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "pshield/errors.hpp"
#include "pshield/simulator.hpp"

using namespace pshield;

namespace {

const VehicleParams kParams{};
const NoiseBounds kBounds{};

const DiscretePlant& plant() {
  static const DiscretePlant p = build_plant(kParams);
  return p;
}

Design baseline() {
  return {fixtures::baseline_l(), fixtures::baseline_pi(), fixtures::baseline_k()};
}

SimConfig quiet(long steps) {
  SimConfig c;
  c.steps = steps;
  c.noise.enabled = false;
  c.estimate_spread = 0.0;
  return c;
}

std::string csv(const SimTrace& t) {
  std::ostringstream os;
  write_trace_csv(os, t);
  return os.str();
}

}  // namespace

TEST(Simulate, ExactModelEquilibrium) {
  auto cfg = quiet(300);
  cfg.lead.kind = LeadInput::Kind::constant;
  cfg.lead.amplitude = 0.0;
  const auto t = simulate(plant(), kParams, kBounds, baseline(), cfg);
  for (const auto& veh : t.data) {
    for (const auto& st : veh) {
      EXPECT_EQ(st.r, Eigen::Vector4d::Zero());
      EXPECT_EQ(st.z, 0.0);
      EXPECT_FALSE(st.alarm);
      EXPECT_DOUBLE_EQ(st.x(kSpacingError), 0.0);
    }
  }
}

TEST(Simulate, EstimateConverges) {
  SimConfig cfg;
  cfg.steps = 2000;  // slowest error mode of the baseline estimator is 0.9953
  cfg.noise.enabled = false;
  cfg.estimate_spread = 1.0;
  const auto t = simulate(plant(), kParams, kBounds, baseline(), cfg);
  const auto& v2 = t.data[1];
  EXPECT_GT(v2.front().e.norm(), 0.1);
  EXPECT_LT(v2.back().e.norm(), 1e-3 * v2.front().e.norm());
}

TEST(Simulate, ResidualMatchesDefinitionAndAlarmRule) {
  SimConfig cfg;
  cfg.steps = 200;
  cfg.attack.kind = AttackKind::random_bounded;
  cfg.attack.magnitude = 3.0;
  const auto d = baseline();
  const auto t = simulate(plant(), kParams, kBounds, d, cfg);
  for (const auto& veh : t.data) {
    for (const auto& st : veh) {
      const Eigen::Vector4d r = plant().Ce * st.e + st.w_e + plant().Gamma * st.delta;
      EXPECT_LE((st.r - r).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_EQ(st.alarm, st.z > 1.0);
      EXPECT_LE(st.w_d.squaredNorm(), kBounds.w1_bar * (1 + 1e-12));
      EXPECT_LE(st.w_u * st.w_u, kBounds.w2_bar * (1 + 1e-12));
      EXPECT_LE(st.w_e.squaredNorm(), kBounds.w3_bar * (1 + 1e-12));
    }
  }
}

TEST(Simulate, PredecessorCommandFeedsFollower) {
  SimConfig cfg;
  cfg.steps = 50;
  cfg.vehicles = 3;
  const auto t = simulate(plant(), kParams, kBounds, baseline(), cfg);
  for (long k = 0; k < 50; ++k) {
    EXPECT_DOUBLE_EQ(t.data[0][k].u_prev, cfg.lead.at(k + 1));
    EXPECT_EQ(t.data[1][k].u_prev, t.data[0][k].u);
    EXPECT_EQ(t.data[2][k].u_prev, t.data[1][k].u);
  }
}

TEST(Simulate, StealthyGreedyNeverAlarms) {
  SimConfig cfg;
  cfg.steps = 500;
  cfg.attack.kind = AttackKind::stealthy_greedy;
  cfg.attack.gamma = 1.0;
  const auto t = simulate(plant(), kParams, kBounds, baseline(), cfg);
  for (const auto& m : detection_metrics(t)) {
    EXPECT_LE(m.max_z, 1.0);
    EXPECT_EQ(m.alarms, 0);
    EXPECT_EQ(m.first_alarm, 0);
    EXPECT_EQ(m.false_alarm_rate, 0.0);
  }
}

TEST(Simulate, StealthyResidualSitsOnTheMargin) {
  SimConfig cfg;
  cfg.steps = 300;
  cfg.attack.kind = AttackKind::stealthy_greedy;
  cfg.attack.gamma = 0.6;
  const auto d = baseline();
  const auto t = simulate(plant(), kParams, kBounds, d, cfg);
  long on_margin = 0;
  for (const auto& veh : t.data) {
    for (const auto& st : veh) {
      EXPECT_LE(st.z, 0.6 * (1 + 1e-12));
      const Eigen::Vector4d q = plant().clean_projector() * (plant().Ce * st.e + st.w_e);
      const Eigen::Matrix2d m = plant().Gamma.transpose() * d.Pi * plant().Gamma;
      const Eigen::Vector2d s0 = -m.ldlt().solve(plant().Gamma.transpose() * d.Pi * q);
      const double z_min = q.dot(d.Pi * q) - s0.dot(m * s0);
      if (z_min < 0.6) {
        EXPECT_NEAR(st.z, 0.6, 1e-9);
        ++on_margin;
      }
    }
  }
  EXPECT_EQ(on_margin, 2 * 300);
}

TEST(AttackStep, ZeroMargin) {
  const auto d = baseline();
  const Eigen::Vector2d delta = stealthy_attack_step(Vec5::Zero(), Eigen::Vector4d::Zero(), d.Pi,
                                                     Eigen::Vector4d(1, 2, 3, 4), 0.0, plant());
  EXPECT_TRUE(delta.isZero(0.0));
}

TEST(AttackStep, UnitBallMaximizer) {
  const Eigen::Vector2d delta =
      stealthy_attack_step(Vec5::Zero(), Eigen::Vector4d::Zero(), Eigen::Matrix4d::Identity(),
                           Eigen::Vector4d::UnitX(), 1.0, plant());
  const Eigen::Vector4d r = plant().Gamma * delta;
  EXPECT_NEAR(r(0), 1.0, 1e-9);
  EXPECT_NEAR(r.tail<3>().norm(), 0.0, 1e-15);
}

TEST(AttackStep, ZeroDirectionFallback) {
  Vec5 e;
  e << 0.3, -0.1, 0.2, 0.05, 0.0;
  const Eigen::Vector4d we(0.01, -0.02, 0.0, 0.03);
  const Eigen::Vector2d delta =
      stealthy_attack_step(e, we, fixtures::baseline_pi(), Eigen::Vector4d::Zero(), 1.0, plant());
  const Eigen::Vector2d want = -plant().GammaPinv * (plant().Ce * e + we);
  EXPECT_LE((delta - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AttackDirection, MatchesImpulseResponse) {
  const auto d = baseline();
  const auto cl = build_closed_loop(plant(), d.K);
  const auto err = build_error_dynamics(plant(), d.L);
  Vec6 target = Vec6::Zero();
  target.head<5>() << -1.0, -0.5, 0.0, 0.0, 0.0;
  const int h = 7;
  const auto g = attack_direction(plant(), d, target, h);
  for (int m = 0; m < 4; ++m) {
    // response of target' zeta to a unit residual at step 0, summed over h steps
    Vec6 zeta = cl.B5.col(m);
    Vec5 e = err.B_r.col(m);
    double sum = 0.0;
    for (int k = 0; k < h; ++k) {
      sum += target.dot(zeta);
      const Vec6 zn = cl.A * zeta + cl.B6 * e;
      e = err.A * e;
      zeta = zn;
    }
    EXPECT_NEAR(g(m), sum, 1e-12 * std::max(1.0, std::abs(sum)));
  }
}

TEST(Detection, ConstantAttackIsDetected) {
  SimConfig cfg;
  cfg.steps = 200;
  cfg.attack.kind = AttackKind::constant;
  cfg.attack.constant = Eigen::Vector2d(5.0, 5.0);
  cfg.attack.vehicle = 2;
  cfg.attack.start = 50;
  const auto t = simulate(plant(), kParams, kBounds, baseline(), cfg);
  const auto m = detection_metrics(t);
  EXPECT_GE(m[1].first_alarm, 50);
  EXPECT_LE(m[1].first_alarm, 200);
  EXPECT_GT(m[1].alarms, 0);
}

TEST(Detection, MetricsCountFromStart) {
  SimTrace t;
  t.vehicles = 1;
  t.steps = 4;
  t.data.assign(1, std::vector<VehicleStep>(4));
  t.data[0][0].alarm = true;
  t.data[0][0].z = 3.0;
  t.data[0][2].alarm = true;
  t.data[0][2].z = 2.0;
  const auto m = detection_metrics(t, 2)[0];
  EXPECT_EQ(m.first_alarm, 1);
  EXPECT_EQ(m.alarms, 1);
  EXPECT_DOUBLE_EQ(m.false_alarm_rate, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.max_z, 3.0);
}

TEST(StringStability, ZeroInputGivesMarker) {
  auto cfg = quiet(100);
  cfg.x_init.setZero();
  cfg.lead.kind = LeadInput::Kind::constant;
  cfg.lead.amplitude = 0.0;
  const auto rep = string_stability_report(simulate(plant(), kParams, kBounds, baseline(), cfg));
  ASSERT_EQ(rep.ratios.size(), 1u);
  EXPECT_TRUE(std::isinf(rep.ratios[0].e_r));
  EXPECT_TRUE(std::isinf(rep.ratios[0].v));
  EXPECT_TRUE(std::isinf(rep.ratios[0].a));
}

TEST(StringStability, DoubledAmplitude) {
  auto cfg = quiet(400);
  cfg.x_init.setZero();
  const auto r1 = string_stability_report(simulate(plant(), kParams, kBounds, baseline(), cfg));
  cfg.lead.amplitude *= 2.0;
  const auto r2 = string_stability_report(simulate(plant(), kParams, kBounds, baseline(), cfg));
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(r2.norm_e_r[i], 2.0 * r1.norm_e_r[i], 1e-9 * r2.norm_e_r[i]);
    EXPECT_NEAR(r2.norm_v[i], 2.0 * r1.norm_v[i], 1e-9 * r2.norm_v[i]);
    EXPECT_NEAR(r2.norm_a[i], 2.0 * r1.norm_a[i], 1e-9 * r2.norm_a[i]);
  }
  EXPECT_NEAR(r2.ratios[0].e_r, r1.ratios[0].e_r, 1e-9);
  EXPECT_NEAR(r2.ratios[0].a, r1.ratios[0].a, 1e-9);
  EXPECT_GE(r1.ratios[0].e_r, 0.0);
}

TEST(StringStability, TsWeightedNorm) {
  SimTrace t;
  t.vehicles = 2;
  t.steps = 2;
  t.ts = 0.5;
  t.data.assign(2, std::vector<VehicleStep>(2));
  for (auto& veh : t.data) {
    for (auto& st : veh) st.x.setZero();
  }
  t.data[0][0].x(kSpacingError) = 3.0;
  t.data[0][1].x(kSpacingError) = 4.0;
  t.data[1][1].x(kSpacingError) = 1.0;
  const auto rep = string_stability_report(t);
  EXPECT_DOUBLE_EQ(rep.norm_e_r[0], std::sqrt(0.5 * 25.0));
  EXPECT_DOUBLE_EQ(rep.ratios[0].e_r, std::sqrt(0.5) / std::sqrt(12.5));
}

TEST(Simulate, LinearInInputs) {
  auto cfg = quiet(300);
  cfg.x_init.setZero();
  cfg.noise.enabled = true;
  cfg.attack.kind = AttackKind::constant;
  cfg.attack.constant = Eigen::Vector2d(0.3, -0.2);
  const auto base = simulate(plant(), kParams, kBounds, baseline(), cfg);
  const double lam = 3.5;
  cfg.lead.amplitude *= lam;
  cfg.noise.scale = lam;
  cfg.attack.constant *= lam;
  const auto scaled = simulate(plant(), kParams, kBounds, baseline(), cfg);
  for (int i = 0; i < 2; ++i) {
    for (long k = 0; k < 300; ++k) {
      const Vec5 want = lam * base.data[i][k].x;
      const Vec5 got = scaled.data[i][k].x;
      EXPECT_LE((got - want).norm(), 1e-9 * std::max(1e-12, want.norm()) + 1e-300)
          << "vehicle " << i + 1 << " step " << k + 1;
    }
  }
}

TEST(Simulate, Deterministic) {
  SimConfig cfg;
  cfg.steps = 200;
  cfg.seed = 7;
  cfg.attack.kind = AttackKind::stealthy_greedy;
  const auto a = csv(simulate(plant(), kParams, kBounds, baseline(), cfg));
  const auto b = csv(simulate(plant(), kParams, kBounds, baseline(), cfg));
  EXPECT_EQ(a, b);
  cfg.seed = 8;
  EXPECT_NE(a, csv(simulate(plant(), kParams, kBounds, baseline(), cfg)));
}

TEST(Simulate, DivergenceNamesStep) {
  auto d = baseline();
  d.K = Gain(-40.0, -40.0);
  SimConfig cfg;
  cfg.steps = 5000;
  try {
    simulate(plant(), kParams, kBounds, d, cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.step(), 1);
    EXPECT_LE(e.step(), 5001);
    EXPECT_NE(std::string(e.what()).find(std::to_string(e.step())), std::string::npos);
  }
}

TEST(Simulate, InvalidConfig) {
  SimConfig cfg;
  cfg.steps = 0;
  EXPECT_THROW(simulate(plant(), kParams, kBounds, baseline(), cfg), ParameterError);
  cfg = SimConfig{};
  cfg.attack.kind = AttackKind::stealthy_greedy;
  cfg.attack.gamma = 1.5;
  EXPECT_THROW(simulate(plant(), kParams, kBounds, baseline(), cfg), ParameterError);
  cfg = SimConfig{};
  cfg.attack.vehicle = 3;
  EXPECT_THROW(simulate(plant(), kParams, kBounds, baseline(), cfg), ParameterError);
}

TEST(Trace, CsvShape) {
  SimConfig cfg;
  cfg.steps = 3;
  const auto text = csv(simulate(plant(), kParams, kBounds, baseline(), cfg));
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  const auto cols = trace_columns();
  EXPECT_EQ(static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1, cols.size());
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1,
              cols.size());
  }
  EXPECT_EQ(rows, 2 * 3);
}
