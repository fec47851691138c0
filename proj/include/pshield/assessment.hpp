#pragma once

// Stealthy reachable-set certificate for a fixed design and its distance to
// the collision and overspeed regions.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "pshield/grid.hpp"
#include "pshield/lti.hpp"
#include "pshield/model.hpp"
#include "pshield/sdp.hpp"

namespace pshield {

struct CriticalStates {
  std::vector<std::string> names;
  std::vector<HalfSpace<double>> half_spaces;

  /// Collision {-e_r - h v > s} and overspeed {v > v_max}.
  static CriticalStates for_vehicle(const VehicleParams& params);
};

struct ReachCertificateZeta {
  Mat6 P;
  double a = 0.0;
  std::vector<double> a_i;
  double alpha_inf = 0.0;  // (6 - a)/(1 - a)
  double objective = 0.0;
  bool tolerance_feasible = false;
  sdp::VerifyReport verification;
};

/// Closed-loop reach program with a full 6x6 P for fixed a. The six channels
/// are u_prev, w_d, w_u, w_e, r and e with weights 1/u_bar, I/w1_bar, 1/w2_bar,
/// I/w3_bar, Pi and Pe/(alpha_inf_e + eps).
sdp::LmiProgram build_reach_program(const ClosedLoopExtended& cl, const NoiseBounds& bounds,
                                    const Eigen::Matrix4d& pi, const Mat5& pe,
                                    double alpha_inf_e, double epsilon, double a);

/// Best certificate over a grid of a (one refinement round by default).
/// Throws InfeasibleError when no grid point is feasible.
ReachCertificateZeta reach_ellipsoid(const ClosedLoopExtended& cl, const NoiseBounds& bounds,
                                     const Eigen::Matrix4d& pi, const Mat5& pe,
                                     double alpha_inf_e, double epsilon,
                                     const std::vector<double>& a_values,
                                     int refinement_rounds = 1,
                                     const sdp::SolverOptions& options = {},
                                     int threads = sdp::default_threads());

struct StateProjection {
  Mat5 Px;
  double alpha = 0.0;
};

/// Shadow of {zeta' P zeta <= alpha} on x: P1 - P2 P3^{-1} P2', same level.
/// Throws CertificateError when the input block P3 is not positive.
StateProjection project_to_state(const Mat6& p_zeta, double alpha);

struct HalfSpaceDistance {
  std::string name;
  double scaled = 0.0;  // (|b| - sqrt(c' P^{-1} c / alpha)) / (c' c)
  double oracle = 0.0;  // signed Euclidean gap
  bool sign_disagreement = false;
};

struct SafetyVerdict {
  double d_inf = 0.0;
  double d_inf_oracle = 0.0;
  std::vector<HalfSpaceDistance> distances;
  bool resilient = false;
  bool sign_disagreement = false;
  Mat5 Px;
  double alpha_inf = 0.0;
};

SafetyVerdict assess(const Mat5& px, double alpha_inf, const CriticalStates& criticals);

}  // namespace pshield
