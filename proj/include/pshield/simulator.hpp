#pragma once

// Discrete-time platoon simulation with estimator, monitor, bounded noise and
// sensor attacks.

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pshield/model.hpp"

namespace pshield {

/// Desired acceleration of the reference vehicle ahead of vehicle 1.
struct LeadInput {
  enum class Kind { constant, exp_decay, samples };
  Kind kind = Kind::exp_decay;
  double amplitude = 2.0;  // constant value, or A in A e^{-beta k}
  double rate = 0.1;       // beta
  std::vector<double> samples;  // k = 1, 2, ...; held at the last value

  double at(long k) const;
};

/// Uniform noise half-widths per channel. Draws that leave the quadratic bound
/// are scaled back onto it.
struct DisturbanceSpec {
  bool enabled = true;
  double wd = 0.1;     // each radar component
  double wu = 0.01;    // V2V channel
  double we = 0.0707;  // each estimator sensor
  double scale = 1.0;  // applied after clipping
};

enum class AttackKind { none, random_bounded, constant, stealthy_greedy };

struct AttackPolicy {
  AttackKind kind = AttackKind::none;
  int vehicle = 0;           // attacked vehicle (1-based); 0 = all
  long start = 1;            // first attacked step
  double gamma = 1.0;        // stealth margin for the greedy policy
  int lookahead = 10;        // steps the greedy attacker looks ahead
  Vec5 target = (Vec5() << -1.0, -0.5, 0.0, 0.0, 0.0).finished();  // x-space push
  Eigen::Vector2d constant{5.0, 5.0};
  double magnitude = 1.0;    // random_bounded: |delta_j| <= magnitude
};

struct SimConfig {
  long steps = 500;
  std::uint64_t seed = 1;
  int vehicles = 2;
  LeadInput lead;
  DisturbanceSpec noise;
  AttackPolicy attack;
  Vec5 x_init = (Vec5() << 0.0, 30.0, 0.0, 0.0, 0.0).finished();
  double estimate_spread = 1.0;  // x_hat(1) = x(1) + U(-spread, spread) per component
  bool validate_bounds = true;   // clip noise to the quadratic bounds

  void validate() const;
};

struct Design {
  Mat54 L;
  Eigen::Matrix4d Pi;
  Gain K;
};

struct VehicleStep {
  Vec5 x, x_hat, e;
  double u = 0.0;
  double u_prev = 0.0;  // true predecessor command
  Eigen::Vector2d y, delta, w_d;
  Eigen::Vector4d y_e, r, w_e;
  double w_u = 0.0;
  double z = 0.0;
  bool alarm = false;
  double gap = 0.0;       // q_{i-1} - q_i - length
  double position = 0.0;  // reconstructed; reference vehicle starts at 0
};

struct SimTrace {
  int vehicles = 0;
  long steps = 0;
  double ts = 0.0;
  std::vector<std::vector<VehicleStep>> data;  // [vehicle][k-1]
  long clipped = 0;                            // noise draws scaled onto a bound
};

/// Throws DivergenceError when |x| exceeds 1e9 (1-based step in the error).
SimTrace simulate(const DiscretePlant& plant, const VehicleParams& params,
                  const NoiseBounds& bounds, const Design& design, const SimConfig& config);

/// Residual-space direction that moves [zeta; e] furthest along `target` over
/// `lookahead` steps, i.e. sum_j Br' (J')^j [target; 0] for the joint closed-loop
/// and error dynamics J.
Eigen::Vector4d attack_direction(const DiscretePlant& plant, const Design& design,
                                 const Vec6& target, int lookahead);

/// Greedy stealthy attack for one step. The residual is r = Gamma s + q with
/// q = (I - Gamma Gamma^+)(Ce e + w_e) beyond the attacker's reach; s maximizes
/// g' Gamma s subject to r' Pi r <= gamma. When q alone exceeds gamma, s
/// minimizes r' Pi r. With g = 0 the attacked channels are zeroed when that
/// is already stealthy.
Eigen::Vector2d stealthy_attack_step(const Vec5& e, const Eigen::Vector4d& w_e,
                                     const Eigen::Matrix4d& pi, const Eigen::Vector4d& g,
                                     double gamma, const DiscretePlant& plant);

struct SignalRatios {
  int vehicle = 0;  // i, compared with i - 1
  double e_r = 0.0, v = 0.0, a = 0.0;  // +inf when the upstream norm is zero
};

struct StringStabilityReport {
  std::vector<double> norm_e_r, norm_v, norm_a;  // per vehicle
  std::vector<SignalRatios> ratios;
};

/// Ts-weighted L2 norms; velocity is taken relative to its initial value.
StringStabilityReport string_stability_report(const SimTrace& trace);

struct DetectionMetrics {
  int vehicle = 0;
  double false_alarm_rate = 0.0;  // alarms / samples for k >= k_start
  double max_z = 0.0;
  long first_alarm = 0;           // 0 when no alarm
  long alarms = 0;
};

std::vector<DetectionMetrics> detection_metrics(const SimTrace& trace, long k_start = 1);

/// Column names of write_trace_csv, in order.
std::vector<std::string> trace_columns();
void write_trace_csv(std::ostream& os, const SimTrace& trace);

}  // namespace pshield
