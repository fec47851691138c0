#pragma once

// Estimator, monitor and controller synthesis programs.

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

#include "pshield/grid.hpp"
#include "pshield/model.hpp"
#include "pshield/sdp.hpp"

namespace pshield {

/// Reach-set inequality for z+ = A z + sum_i B_i w_i with w_i' W_i w_i <= 1:
///   [[a P, (PA)', 0], [PA, P, PB], [0, (PB)', diag((1 - a_i) W_i)]] >= 0
/// given the affine products PA and PB = [P B_1 ... P B_N] and the scaled
/// weights (1 - a_i) W_i.
sdp::AffineMatrix reach_block(const sdp::AffineMatrix& p, const sdp::AffineMatrix& pa,
                              const sdp::AffineMatrix& pb, double a,
                              const std::vector<sdp::AffineMatrix>& scaled_weights);

/// Limit level (N - a)/(1 - a) of the reach-set bound for N channels.
double limit_level(int channels, double a);
/// a^{k-1} z1' P z1 + (N - a)(1 - a^{k-1})/(1 - a) for k >= 1.
double level_at(int channels, double a, double initial_level, int k);

struct ReachCertificate {
  Eigen::MatrixXd P;
  double a = 0.0;
  std::vector<double> a_i;
  int channels = 0;
  double objective = 0.0;
  bool tolerance_feasible = false;
  sdp::VerifyReport verification;
};

/// Minimum-volume ellipsoid certificate for a generic system over a grid of a.
/// Returns false when no grid point is feasible.
bool certify_reach(const Eigen::MatrixXd& a_mat, const std::vector<Eigen::MatrixXd>& b,
                   const std::vector<Eigen::MatrixXd>& w, const std::vector<double>& a_grid,
                   ReachCertificate& out, const sdp::SolverOptions& options = {},
                   int threads = sdp::default_threads());

// ---------------------------------------------------------------------------

struct EstimatorMonitorOptions {
  double alpha1 = 0.95;
  double alpha2 = 0.05;
  double epsilon = 1e-3;
  // Pe <= pe_max I. Without it the volume objective is unbounded below: an
  // error direction that no noise reaches can be shrunk indefinitely.
  double pe_max = 1e6;
  std::vector<double> a_values = sdp::linspace_step(0.05, 0.95, 0.05);
  std::vector<double> c_values = sdp::linspace_step(0.05, 0.95, 0.05);
  std::vector<double> a3_values = sdp::linspace_step(0.1, 0.9, 0.1);
  std::vector<double> tau1_values = sdp::linspace_step(0.1, 0.9, 0.1);
  // (a3, tau1) held fixed while screening (a, c)
  double screen_a3 = 0.5;
  double screen_tau1 = 0.1;
  int refinement_rounds = 1;
  sdp::SolverOptions solver;
  int threads = sdp::default_threads();

  void validate() const;
};

struct EstimatorMonitorResult {
  Mat54 L;
  Mat54 Y;
  Eigen::Matrix4d Pi;
  Mat5 Pe;
  double a = 0, c = 0, a1 = 0, a2 = 0, a3 = 0, c1 = 0, c2 = 0, tau1 = 0, tau2 = 0;
  double epsilon = 0;
  double alpha_inf_e = 0;      // (3 - a)/(1 - a)
  double alpha_bar_inf_e = 0;  // (2 - c)/(1 - c)
  double objective = 0;
  bool tolerance_feasible = false;
  std::size_t grid_points = 0;
  sdp::VerifyReport verification;
};

/// Joint estimator/monitor program for fixed (a, c, a3, tau1). Variables are
/// named Pe, Y, Pi, a1, a2, c1, c2, tau2.
sdp::LmiProgram build_estimator_monitor_program(const DiscretePlant& plant,
                                                const NoiseBounds& bounds, double alpha1,
                                                double alpha2, double epsilon, double a,
                                                double c, double a3, double tau1,
                                                double pe_max = 1e6);

/// Staged grid: (a, c) at the screening (a3, tau1), then (a3, tau1) at the
/// winning (a, c), then local refinement of all four. Throws
/// InfeasibleError when nothing on the grid is feasible.
EstimatorMonitorResult synthesize_estimator_monitor(const DiscretePlant& plant,
                                                    const NoiseBounds& bounds,
                                                    const EstimatorMonitorOptions& options);

struct MonitorResult {
  Eigen::Matrix4d Pi;
  Mat5 Pe;
  double c = 0, c1 = 0, c2 = 0;
  double alpha_bar_inf_e = 0;
  double objective = 0;
  bool tolerance_feasible = false;
  sdp::VerifyReport verification;
};

/// Monitor-only program for a fixed estimator gain at contraction rate c.
sdp::LmiProgram build_monitor_program(const DiscretePlant& plant, const NoiseBounds& bounds,
                                      const Mat54& l, double epsilon, double c,
                                      double pe_max = 1e6);

MonitorResult synthesize_monitor_given_L(const DiscretePlant& plant, const NoiseBounds& bounds,
                                         const Mat54& l, double epsilon,
                                         const std::vector<double>& c_values,
                                         const sdp::SolverOptions& options = {},
                                         int threads = sdp::default_threads());

/// First k >= 1 with c^{k-1} (initial_level - alpha_bar) <= epsilon.
int k_bar_star(double c, double initial_level, double alpha_bar_inf, double epsilon);

struct ErrorCertificate {
  Mat5 Pe;
  double a = 0, a1 = 0, a2 = 0, a3 = 0;
  double alpha_inf_e = 0;
  double objective = 0;
  bool tolerance_feasible = false;
  sdp::VerifyReport verification;
};

/// Attacked-error ellipsoid for fixed (L, Pi): the reach inequality of the
/// joint program with a1, a2, a3 free, over a grid of a.
ErrorCertificate certify_error(const DiscretePlant& plant, const NoiseBounds& bounds,
                               const Mat54& l, const Eigen::Matrix4d& pi,
                               const std::vector<double>& a_values,
                               const sdp::SolverOptions& options = {},
                               int threads = sdp::default_threads());

// ---------------------------------------------------------------------------

struct ControllerOptions {
  double lambda_max = -0.01;
  double epsilon = 1e-3;
  bool enforce_kd_upper = true;  // k_d < 1/(3 tau)
  std::vector<double> a_values = sdp::linspace_step(0.05, 0.95, 0.05);
  int refinement_rounds = 1;
  sdp::SolverOptions solver;
  int threads = sdp::default_threads();
};

struct ControllerResult {
  Gain K;
  Gain K_tilde;
  Mat6 Pzeta;
  Mat5 X;
  double x_tilde = 0;
  double a = 0;
  std::vector<double> a_i;
  double lambda_max = 0;
  double alpha_inf_zeta = 0;  // (6 - a)/(1 - a)
  double objective = 0;
  bool tolerance_feasible = false;
  sdp::VerifyReport verification;
};

/// Throws ParameterError unless lambda_max < 0 and tau < -1/(3 lambda_max).
void check_decay_preconditions(double tau, double lambda_max);

/// Controller program with P = diag(X, x~) and K~ = x~ K. Variables X, x_tilde,
/// K_tilde, a1..a6.
sdp::LmiProgram build_controller_program(const DiscretePlant& plant, const VehicleParams& params,
                                         const NoiseBounds& bounds, const Eigen::Matrix4d& pi,
                                         const Mat5& pe, double alpha_inf_e, double epsilon,
                                         double lambda_max, bool enforce_kd_upper, double a);

ControllerResult synthesize_controller(const DiscretePlant& plant, const VehicleParams& params,
                                       const NoiseBounds& bounds, const Eigen::Matrix4d& pi,
                                       const Mat5& pe, double alpha_inf_e,
                                       const ControllerOptions& options);

/// Eigenvalues of [[0,1,0],[0,0,1],[-kp/tau, -kd/tau, -1/tau]].
Eigen::Vector3cd eig_Ae(const Gain& k, double tau);
/// |tau s^3 + s^2 + kd s + kp| at s.
double ae_char_residual(const Gain& k, double tau, std::complex<double> s);

/// Names of the scalar gain conditions that K violates (empty when all hold).
std::vector<std::string> controller_gain_violations(const Gain& k, double tau, double lambda_max,
                                                    bool enforce_kd_upper);

}  // namespace pshield
