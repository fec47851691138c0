#include "pshield/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pshield/errors.hpp"
#include "pshield/synthesis.hpp"

namespace pshield {

using sdp::AffineMatrix;

CriticalStates CriticalStates::for_vehicle(const VehicleParams& params) {
  params.validate();
  CriticalStates out;
  Eigen::VectorXd c1 = Eigen::VectorXd::Zero(5);
  c1(kSpacingError) = -1.0;
  c1(kVelocity) = -params.h;
  Eigen::VectorXd c2 = Eigen::VectorXd::Zero(5);
  c2(kVelocity) = 1.0;
  out.names = {"collision", "overspeed"};
  out.half_spaces.emplace_back(c1, params.standstill);
  out.half_spaces.emplace_back(c2, params.v_max);
  return out;
}

sdp::LmiProgram build_reach_program(const ClosedLoopExtended& cl, const NoiseBounds& bounds,
                                    const Eigen::Matrix4d& pi, const Mat5& pe,
                                    double alpha_inf_e, double epsilon, double a) {
  bounds.validate();
  if (!(a > 0.0 && a < 1.0)) throw ParameterError("contraction rate must lie in (0,1)");
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  if (!(alpha_inf_e > 0.0)) throw ParameterError("error level must be positive");

  sdp::LmiProgram prog;
  const auto p = prog.add_symmetric("P", 6, true);
  std::vector<AffineMatrix> rates;
  AffineMatrix sum = AffineMatrix::scalar(-a);
  for (int i = 1; i <= 6; ++i) {
    rates.push_back(prog.add_scalar("a" + std::to_string(i), 0.0, 1.0));
    sum += rates.back();
  }
  prog.add_linear("a sum >= rate", sum);

  auto scaled = [](const AffineMatrix& rate, const Eigen::MatrixXd& w) {
    return AffineMatrix::kron(AffineMatrix::scalar(1.0) - rate, w);
  };
  const Eigen::MatrixXd id1 = Eigen::MatrixXd::Identity(1, 1);
  const Eigen::MatrixXd id2 = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd id4 = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::MatrixXd stacked = cl.stacked();
  prog.add_lmi("closed-loop reach",
               reach_block(p, p * cl.A, p * stacked, a,
                           {scaled(rates[0], id1 / bounds.u_bar),
                            scaled(rates[1], id2 / bounds.w1_bar),
                            scaled(rates[2], id1 / bounds.w2_bar),
                            scaled(rates[3], id4 / bounds.w3_bar),
                            scaled(rates[4], pi),
                            scaled(rates[5], pe / (alpha_inf_e + epsilon))}));
  prog.add_logdet("P", 1.0, p);
  // grid points are compared by the volume of {z' P z <= alpha_inf}
  prog.add_linear_objective(AffineMatrix::scalar(6.0 * std::log((6.0 - a) / (1.0 - a))));
  return prog;
}

ReachCertificateZeta reach_ellipsoid(const ClosedLoopExtended& cl, const NoiseBounds& bounds,
                                     const Eigen::Matrix4d& pi, const Mat5& pe,
                                     double alpha_inf_e, double epsilon,
                                     const std::vector<double>& a_values, int refinement_rounds,
                                     const sdp::SolverOptions& options, int threads) {
  sdp::GridSpec grid{{"a"}, {a_values}, refinement_rounds, {}};
  auto res = sdp::grid_search(
      [&](const sdp::GridPoint& g) {
        return build_reach_program(cl, bounds, pi, pe, alpha_inf_e, epsilon, g[0]);
      },
      grid, options, threads);
  if (!res.feasible) {
    std::ostringstream os;
    os << "closed-loop certificate: no feasible rate out of " << res.evaluated
       << " (smallest infeasibility " << res.best_infeasibility << ")";
    throw InfeasibleError(os.str(), res.best_infeasibility);
  }
  ReachCertificateZeta out;
  const auto& x = res.solution.x;
  out.P = res.program.value_of("P", x);
  out.a = res.point[0];
  for (int i = 1; i <= 6; ++i) out.a_i.push_back(res.program.scalar_of("a" + std::to_string(i), x));
  out.alpha_inf = (6.0 - out.a) / (1.0 - out.a);
  out.objective = res.solution.objective;
  out.tolerance_feasible = res.solution.tolerance_feasible;
  out.verification = sdp::verify(res.program, x, 1e-6);
  return out;
}

StateProjection project_to_state(const Mat6& p_zeta, double alpha) {
  const double p3 = p_zeta(5, 5);
  if (!(p3 > 0.0)) {
    std::ostringstream os;
    os << "certificate has nonpositive input block " << p3;
    throw CertificateError(os.str());
  }
  StateProjection out;
  const Vec5 p2 = p_zeta.topRightCorner<5, 1>();
  out.Px = p_zeta.topLeftCorner<5, 5>() - p2 * p2.transpose() / p3;
  out.Px = (0.5 * (out.Px + out.Px.transpose())).eval();
  out.alpha = alpha;
  return out;
}

SafetyVerdict assess(const Mat5& px, double alpha_inf, const CriticalStates& criticals) {
  const Ellipsoid<double> e(px, alpha_inf);
  SafetyVerdict v;
  v.Px = px;
  v.alpha_inf = alpha_inf;
  v.d_inf = std::numeric_limits<double>::infinity();
  v.d_inf_oracle = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < criticals.half_spaces.size(); ++j) {
    const auto& h = criticals.half_spaces[j];
    HalfSpaceDistance d;
    d.name = j < criticals.names.size() ? criticals.names[j] : "half-space " + std::to_string(j);
    d.scaled = distance_to_halfspace_scaled(e, h);
    d.oracle = distance_to_halfspace_oracle(e, h);
    d.sign_disagreement = (d.scaled > 0.0) != (d.oracle > 0.0);
    v.sign_disagreement = v.sign_disagreement || d.sign_disagreement;
    v.d_inf = std::min(v.d_inf, d.scaled);
    v.d_inf_oracle = std::min(v.d_inf_oracle, d.oracle);
    v.distances.push_back(d);
  }
  v.resilient = v.d_inf > 0.0;
  return v;
}

}  // namespace pshield
