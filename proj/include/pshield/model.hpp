#pragma once

// CACC vehicle model. Per-vehicle state ordering is fixed throughout:
//   x = [e_r, v, a, dv, a_prev]
// spacing error, velocity, acceleration, relative velocity to the predecessor,
// predecessor acceleration. The extended closed-loop state is zeta = [x; u].

#include <Eigen/Dense>

namespace pshield {

using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat25 = Eigen::Matrix<double, 2, 5>;
using Mat45 = Eigen::Matrix<double, 4, 5>;
using Mat54 = Eigen::Matrix<double, 5, 4>;
using Mat42 = Eigen::Matrix<double, 4, 2>;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using Gain = Eigen::RowVector2d;

enum StateIndex : Eigen::Index {
  kSpacingError = 0,
  kVelocity = 1,
  kAcceleration = 2,
  kRelativeVelocity = 3,
  kPredecessorAcceleration = 4,
  kInput = 5,  // zeta only
};

struct VehicleParams {
  double h = 0.5;            // time headway [s]
  double tau = 0.1;          // driveline time constant [s]
  double ts = 0.1;           // sample time [s]
  double standstill = 3.0;   // s_i [m]
  double length = 4.0;       // L_i [m]
  double v_max = 35.0;       // [m/s]

  /// Throws ParameterError naming the first violated bound.
  void validate() const;
};

struct NoiseBounds {
  double u_bar = 4.0;     // u_{i-1}^2 <= u_bar
  double w1_bar = 0.01;   // radar noise  w_d' w_d <= w1_bar
  double w2_bar = 1e-4;   // channel noise w_u^2 <= w2_bar
  double w3_bar = 0.02;   // estimator sensors w_e' w_e <= w3_bar

  void validate() const;
};

struct ContinuousPlant {
  Mat5 Ac;
  Vec5 Bc1;  // own desired acceleration u_i
  Vec5 Bc2;  // predecessor desired acceleration u_{i-1}
  Mat25 C;   // radar outputs [e_r, d/dt e_r]
};

struct DiscretePlant {
  Mat5 A;
  Vec5 B1;
  Vec5 B2;
  double au = 0.0;  // input filter pole e^{-Ts/h}
  double bu = 0.0;  // input filter gain 1 - e^{-Ts/h}
  Mat25 C;
  Mat45 Ce;         // estimator sensors [e_r, v, a, dv]
  Mat42 Gamma;      // sensors reached by the radar attack
  Mat24 GammaPinv;

  /// Gamma Gamma^+ : orthogonal projector onto the attacked sensor channels.
  Eigen::Matrix4d attacked_projector() const { return Gamma * GammaPinv; }
  /// I - Gamma Gamma^+
  Eigen::Matrix4d clean_projector() const {
    return Eigen::Matrix4d::Identity() - attacked_projector();
  }
};

/// zeta(k+1) = A zeta + B1 u_prev + B2 w_d + B3 w_u + B4 w_e + B5 r + B6 e
struct ClosedLoopExtended {
  Mat6 A;
  Eigen::Matrix<double, 6, 1> B1;
  Eigen::Matrix<double, 6, 2> B2;
  Eigen::Matrix<double, 6, 1> B3;
  Eigen::Matrix<double, 6, 4> B4;
  Eigen::Matrix<double, 6, 4> B5;
  Eigen::Matrix<double, 6, 5> B6;

  /// [B1 B2 B3 B4 B5 B6], 6 x 17.
  Eigen::MatrixXd stacked() const;
};

/// e(k+1) = A e + B_wu w_u + B_we w_e + B_r r, valid under any stealthy attack
/// once delta has been expressed through the residual.
struct ErrorDynamics {
  Mat5 A;
  Vec5 B_wu;
  Mat54 B_we;
  Mat54 B_r;
};

ContinuousPlant build_continuous(const VehicleParams& params);
DiscretePlant build_discrete(const ContinuousPlant& cont, const VehicleParams& params);
inline DiscretePlant build_plant(const VehicleParams& params) {
  return build_discrete(build_continuous(params), params);
}

ClosedLoopExtended build_closed_loop(const DiscretePlant& plant, const Gain& k);
ErrorDynamics build_error_dynamics(const DiscretePlant& plant, const Mat54& l);

/// Attack signal consistent with residual r: Gamma^+ (r - Ce e - w_e).
Eigen::Vector2d recover_delta(const Eigen::Vector4d& r, const Vec5& e,
                              const Eigen::Vector4d& w_e, const DiscretePlant& plant);

/// rank [Ce; Ce A; ...; Ce A^4]
int observability_rank(const DiscretePlant& plant);

}  // namespace pshield
