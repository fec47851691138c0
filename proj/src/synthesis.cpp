#include "pshield/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pshield/errors.hpp"

namespace pshield {

using sdp::AffineMatrix;
using sdp::LmiProgram;

sdp::AffineMatrix reach_block(const AffineMatrix& p, const AffineMatrix& pa,
                              const AffineMatrix& pb, double a,
                              const std::vector<AffineMatrix>& scaled_weights) {
  const AffineMatrix w = AffineMatrix::block_diag(scaled_weights);
  if (w.rows() != pb.cols()) throw DimensionError("reach block: weights do not match PB");
  const AffineMatrix z(p.rows(), w.cols());
  return AffineMatrix::blocks({{a * p, pa.transpose(), z},
                               {pa, p, pb},
                               {z.transpose(), pb.transpose(), w}})
      .symmetrized();
}

double limit_level(int channels, double a) {
  if (!(a > 0.0 && a < 1.0)) throw ParameterError("contraction rate must lie in (0,1)");
  return (channels - a) / (1.0 - a);
}

double level_at(int channels, double a, double initial_level, int k) {
  if (k < 1) throw ParameterError("level index starts at 1");
  const double ak = std::pow(a, k - 1);
  return ak * initial_level + (channels - a) * (1.0 - ak) / (1.0 - a);
}

namespace {

AffineMatrix one_minus(const AffineMatrix& s) { return AffineMatrix::scalar(1.0) - s; }

AffineMatrix weight(const AffineMatrix& coeff, const Eigen::MatrixXd& m) {
  return AffineMatrix::kron(coeff, m);
}

Eigen::MatrixXd eye(Eigen::Index n) { return Eigen::MatrixXd::Identity(n, n); }

void check_rate(double v, const char* what) {
  if (!(v > 0.0 && v < 1.0)) {
    throw ParameterError(std::string(what) + " must lie in (0,1)");
  }
}

// Scalars a_1..a_n in (0,1) with sum >= a.
std::vector<AffineMatrix> rate_split(LmiProgram& prog, const std::string& prefix, int n,
                                     double a) {
  std::vector<AffineMatrix> out;
  AffineMatrix sum = AffineMatrix::scalar(-a);
  for (int i = 1; i <= n; ++i) {
    out.push_back(prog.add_scalar(prefix + std::to_string(i), 0.0, 1.0));
    sum += out.back();
  }
  prog.add_linear(prefix + " sum >= rate", sum);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

bool certify_reach(const Eigen::MatrixXd& a_mat, const std::vector<Eigen::MatrixXd>& b,
                   const std::vector<Eigen::MatrixXd>& w, const std::vector<double>& a_grid,
                   ReachCertificate& out, const sdp::SolverOptions& options, int threads) {
  const auto n = a_mat.rows();
  if (a_mat.cols() != n) throw DimensionError("certify_reach: A must be square");
  if (b.size() != w.size() || b.empty()) throw DimensionError("certify_reach: one weight per input");
  Eigen::Index m = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i].rows() != n || w[i].rows() != b[i].cols() || w[i].cols() != b[i].cols()) {
      throw DimensionError("certify_reach: input block shapes");
    }
    m += b[i].cols();
  }
  Eigen::MatrixXd b_all(n, m);
  for (std::size_t i = 0, c = 0; i < b.size(); c += b[i].cols(), ++i) {
    b_all.middleCols(c, b[i].cols()) = b[i];
  }
  const int channels = static_cast<int>(b.size());

  auto builder = [&](const sdp::GridPoint& pt) {
    const double a = pt[0];
    LmiProgram prog;
    const auto p = prog.add_symmetric("P", n, true);
    const auto rates = rate_split(prog, "a", channels, a);
    std::vector<AffineMatrix> ws;
    for (int i = 0; i < channels; ++i) ws.push_back(weight(one_minus(rates[i]), w[i]));
    prog.add_lmi("reach", reach_block(p, p * a_mat, p * b_all, a, ws));
    prog.add_logdet("P", 1.0, p);
    // compare rates by the volume of {z' P z <= limit level}
    prog.add_linear_objective(
        AffineMatrix::scalar(static_cast<double>(n) * std::log(limit_level(channels, a))));
    return prog;
  };
  sdp::GridSpec grid{{"a"}, {a_grid}, 1, {}};
  auto res = sdp::grid_search(builder, grid, options, threads);
  if (!res.feasible) return false;
  const auto& x = res.solution.x;
  out.P = res.program.value_of("P", x);
  out.a = res.point[0];
  out.a_i.clear();
  for (int i = 1; i <= channels; ++i) out.a_i.push_back(res.program.scalar_of("a" + std::to_string(i), x));
  out.channels = channels;
  out.objective = res.solution.objective;
  out.tolerance_feasible = res.solution.tolerance_feasible;
  out.verification = sdp::verify(res.program, x, 1e-6);
  return true;
}

// ---------------------------------------------------------------------------

void EstimatorMonitorOptions::validate() const {
  if (!(alpha1 > 0.0) || !(alpha2 > 0.0)) throw ParameterError("objective weights must be positive");
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  for (const auto* set : {&a_values, &c_values, &a3_values, &tau1_values}) {
    if (set->empty()) throw ParameterError("empty grid");
    for (double v : *set) check_rate(v, "grid value");
  }
  check_rate(screen_a3, "screening a3");
  check_rate(screen_tau1, "screening tau1");
  if (refinement_rounds < 0) throw ParameterError("negative refinement rounds");
  if (!(pe_max > 0.0)) throw ParameterError("Pe cap must be positive");
}

LmiProgram build_estimator_monitor_program(const DiscretePlant& plant, const NoiseBounds& bounds,
                                           double alpha1, double alpha2, double epsilon,
                                           double a, double c, double a3, double tau1,
                                           double pe_max) {
  bounds.validate();
  for (double v : {a, c, a3, tau1}) check_rate(v, "estimator/monitor grid value");
  if (!(pe_max > 0.0)) throw ParameterError("Pe cap must be positive");
  const double alpha_inf = (3.0 - a) / (1.0 - a);
  const double alpha_bar = (2.0 - c) / (1.0 - c);

  LmiProgram prog;
  const auto pe = prog.add_symmetric("Pe", 5, true);
  prog.add_lmi("Pe cap", pe_max * eye(5) - pe);
  const auto y = prog.add_matrix("Y", 5, 4);
  const auto pi = prog.add_symmetric("Pi", 4, true);
  const auto a1 = prog.add_scalar("a1", 0.0, 1.0);
  const auto a2 = prog.add_scalar("a2", 0.0, 1.0);
  prog.add_linear("a1 + a2 + a3 >= a", a1 + a2 + AffineMatrix::scalar(a3 - a));
  const auto c1 = prog.add_scalar("c1", 0.0, 1.0);
  const auto c2 = prog.add_scalar("c2", 0.0, 1.0);
  prog.add_linear("c1 + c2 > c", c1 + c2 - AffineMatrix::scalar(c));
  const auto tau2 = prog.add_scalar("tau2", 0.0);

  const Eigen::Matrix4d clean = plant.clean_projector();
  const Eigen::Matrix4d attacked = plant.attacked_projector();
  const Eigen::MatrixXd ce = plant.Ce;

  // attacked error: only the clean channels correct the estimate
  {
    const AffineMatrix pa = pe * plant.A - y * clean * ce;
    const AffineMatrix pb = AffineMatrix::blocks({{-(pe * plant.B2), -(y * clean), -(y * attacked)}});
    prog.add_lmi("attacked error reach",
                 reach_block(pe, pa, pb, a,
                             {weight(one_minus(a1), eye(1) / bounds.w2_bar),
                              weight(one_minus(a2), eye(4) / bounds.w3_bar),
                              (1.0 - a3) * pi}));
  }
  // attacked residual stays inside the monitor ellipsoid
  {
    const AffineMatrix f2 = AffineMatrix::scalar(1.0 - tau1 * (alpha_inf + epsilon)) -
                            bounds.w3_bar * tau2;
    const AffineMatrix cpc = (ce.transpose() * pi * ce).symmetrized();
    const AffineMatrix cp = ce.transpose() * pi;
    prog.add_lmi("attacked residual",
                 AffineMatrix::blocks({{tau1 * pe - cpc, -cp, {}},
                                       {-cp.transpose(), AffineMatrix::kron(tau2, eye(4)) - pi, {}},
                                       {{}, {}, f2}})
                     .symmetrized());
  }
  // attack-free error
  {
    const AffineMatrix pa = pe * plant.A - y * ce;
    const AffineMatrix pb = AffineMatrix::blocks({{-(pe * plant.B2), -y}});
    prog.add_lmi("clean error reach",
                 reach_block(pe, pa, pb, c,
                             {weight(one_minus(c1), eye(1) / bounds.w2_bar),
                              weight(one_minus(c2), eye(4) / bounds.w3_bar)}));
  }
  // attack-free residual contains the monitor ellipsoid complement
  {
    const double g = 1.0 / (alpha_bar + epsilon + bounds.w3_bar);
    const AffineMatrix cpc = (ce.transpose() * pi * ce).symmetrized();
    const AffineMatrix cp = ce.transpose() * pi;
    prog.add_lmi("clean residual",
                 AffineMatrix::blocks({{g * pe - cpc, -cp}, {-cp.transpose(), g * eye(4) - pi}})
                     .symmetrized());
  }
  prog.add_logdet("Pe", alpha1, pe);
  prog.add_logdet("Pi", alpha2, pi);
  // the error ellipsoid has level alpha_inf, so its volume term carries it
  prog.add_linear_objective(AffineMatrix::scalar(alpha1 * 5.0 * std::log(alpha_inf)));
  return prog;
}

namespace {

EstimatorMonitorResult unpack(const sdp::GridResult& res, double epsilon) {
  EstimatorMonitorResult out;
  const auto& prog = res.program;
  const auto& x = res.solution.x;
  out.Pe = prog.value_of("Pe", x);
  out.Y = prog.value_of("Y", x);
  out.Pi = prog.value_of("Pi", x);
  out.L = out.Pe.ldlt().solve(out.Y);
  out.a = res.point[0];
  out.c = res.point[1];
  out.a3 = res.point[2];
  out.tau1 = res.point[3];
  out.a1 = prog.scalar_of("a1", x);
  out.a2 = prog.scalar_of("a2", x);
  out.c1 = prog.scalar_of("c1", x);
  out.c2 = prog.scalar_of("c2", x);
  out.tau2 = prog.scalar_of("tau2", x);
  out.epsilon = epsilon;
  out.alpha_inf_e = (3.0 - out.a) / (1.0 - out.a);
  out.alpha_bar_inf_e = (2.0 - out.c) / (1.0 - out.c);
  out.objective = res.solution.objective;
  out.tolerance_feasible = res.solution.tolerance_feasible;
  out.verification = sdp::verify(prog, x, 1e-6);
  return out;
}

double min_spacing(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double d = v[i] - v[i - 1];
    if (d > 0.0 && (s == 0.0 || d < s)) s = d;
  }
  return s;
}

[[noreturn]] void throw_infeasible(const char* what, const sdp::GridResult& res) {
  std::ostringstream os;
  os << what << ": no feasible grid point out of " << res.evaluated;
  if (!res.best_infeasible_point.empty()) {
    os << " (smallest infeasibility " << res.best_infeasibility << " at";
    for (double v : res.best_infeasible_point) os << ' ' << v;
    os << ')';
  }
  throw InfeasibleError(os.str(), res.best_infeasibility);
}

}  // namespace

EstimatorMonitorResult synthesize_estimator_monitor(const DiscretePlant& plant,
                                                    const NoiseBounds& bounds,
                                                    const EstimatorMonitorOptions& opt) {
  opt.validate();
  bounds.validate();
  auto build4 = [&](const sdp::GridPoint& p) {
    return build_estimator_monitor_program(plant, bounds, opt.alpha1, opt.alpha2, opt.epsilon,
                                           p[0], p[1], p[2], p[3], opt.pe_max);
  };
  std::size_t evaluated = 0;

  // stage 1: (a, c) with (a3, tau1) held at the screening values
  sdp::GridSpec g1{{"a", "c"}, {opt.a_values, opt.c_values}, 0, {}};
  auto s1 = sdp::grid_search(
      [&](const sdp::GridPoint& p) {
        return build4({p[0], p[1], opt.screen_a3, opt.screen_tau1});
      },
      g1, opt.solver, opt.threads);
  evaluated += s1.evaluated;
  if (!s1.feasible) throw_infeasible("estimator/monitor screening", s1);
  const double a = s1.point[0], c = s1.point[1];

  // stage 2: (a3, tau1) at the winning (a, c)
  sdp::GridSpec g2{{"a3", "tau1"}, {opt.a3_values, opt.tau1_values}, 0, {}};
  auto s2 = sdp::grid_search(
      [&](const sdp::GridPoint& p) { return build4({a, c, p[0], p[1]}); }, g2, opt.solver,
      opt.threads);
  evaluated += s2.evaluated;
  double a3 = opt.screen_a3, tau1 = opt.screen_tau1;
  if (s2.feasible && s2.solution.objective < s1.solution.objective) {
    a3 = s2.point[0];
    tau1 = s2.point[1];
  }

  // stage 3: local refinement of all four around the incumbent
  sdp::GridSpec g3{{"a", "c", "a3", "tau1"},
                   {{a}, {c}, {a3}, {tau1}},
                   opt.refinement_rounds,
                   {min_spacing(opt.a_values), min_spacing(opt.c_values),
                    min_spacing(opt.a3_values), min_spacing(opt.tau1_values)}};
  auto s3 = sdp::grid_search(build4, g3, opt.solver, opt.threads);
  evaluated += s3.evaluated;
  if (!s3.feasible) throw_infeasible("estimator/monitor refinement", s3);

  auto out = unpack(s3, opt.epsilon);
  out.grid_points = evaluated;
  return out;
}

// ---------------------------------------------------------------------------

LmiProgram build_monitor_program(const DiscretePlant& plant, const NoiseBounds& bounds,
                                 const Mat54& l, double epsilon, double c, double pe_max) {
  bounds.validate();
  check_rate(c, "c");
  if (!(pe_max > 0.0)) throw ParameterError("Pe cap must be positive");
  const double alpha_bar = (2.0 - c) / (1.0 - c);
  LmiProgram prog;
  const auto pe = prog.add_symmetric("Pe", 5, true);
  prog.add_lmi("Pe cap", pe_max * eye(5) - pe);
  const auto pi = prog.add_symmetric("Pi", 4, true);
  const auto c1 = prog.add_scalar("c1", 0.0, 1.0);
  const auto c2 = prog.add_scalar("c2", 0.0, 1.0);
  prog.add_linear("c1 + c2 > c", c1 + c2 - AffineMatrix::scalar(c));

  const Eigen::MatrixXd ce = plant.Ce;
  const Mat5 a_l = plant.A - l * plant.Ce;
  Eigen::Matrix<double, 5, 5> b;
  b << -plant.B2, -l;
  prog.add_lmi("clean error reach",
               reach_block(pe, pe * a_l, pe * b, c,
                           {weight(one_minus(c1), eye(1) / bounds.w2_bar),
                            weight(one_minus(c2), eye(4) / bounds.w3_bar)}));
  const double g = 1.0 / (alpha_bar + epsilon + bounds.w3_bar);
  const AffineMatrix cpc = (ce.transpose() * pi * ce).symmetrized();
  const AffineMatrix cp = ce.transpose() * pi;
  prog.add_lmi("clean residual",
               AffineMatrix::blocks({{g * pe - cpc, -cp}, {-cp.transpose(), g * eye(4) - pi}})
                   .symmetrized());
  prog.add_logdet("Pi", 1.0, pi);
  return prog;
}

MonitorResult synthesize_monitor_given_L(const DiscretePlant& plant, const NoiseBounds& bounds,
                                         const Mat54& l, double epsilon,
                                         const std::vector<double>& c_values,
                                         const sdp::SolverOptions& options, int threads) {
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  sdp::GridSpec grid{{"c"}, {c_values}, 1, {}};
  auto res = sdp::grid_search(
      [&](const sdp::GridPoint& p) { return build_monitor_program(plant, bounds, l, epsilon, p[0]); },
      grid, options, threads);
  if (!res.feasible) throw_infeasible("monitor", res);
  MonitorResult out;
  const auto& x = res.solution.x;
  out.Pi = res.program.value_of("Pi", x);
  out.Pe = res.program.value_of("Pe", x);
  out.c = res.point[0];
  out.c1 = res.program.scalar_of("c1", x);
  out.c2 = res.program.scalar_of("c2", x);
  out.alpha_bar_inf_e = (2.0 - out.c) / (1.0 - out.c);
  out.objective = res.solution.objective;
  out.tolerance_feasible = res.solution.tolerance_feasible;
  out.verification = sdp::verify(res.program, x, 1e-6);
  return out;
}

int k_bar_star(double c, double initial_level, double alpha_bar_inf, double epsilon) {
  check_rate(c, "c");
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  const double gap = initial_level - alpha_bar_inf;
  if (gap <= epsilon) return 1;
  // c^{k-1} gap <= eps  <=>  k - 1 >= log(eps/gap)/log(c)
  int k = 1 + static_cast<int>(std::ceil(std::log(epsilon / gap) / std::log(c) - 1e-12));
  while (k > 1 && std::pow(c, k - 2) * gap <= epsilon) --k;
  while (std::pow(c, k - 1) * gap > epsilon) ++k;
  return k;
}

ErrorCertificate certify_error(const DiscretePlant& plant, const NoiseBounds& bounds,
                               const Mat54& l, const Eigen::Matrix4d& pi,
                               const std::vector<double>& a_values,
                               const sdp::SolverOptions& options, int threads) {
  bounds.validate();
  const auto err = build_error_dynamics(plant, l);
  ReachCertificate rc;
  const bool ok = certify_reach(err.A, {err.B_wu, err.B_we, err.B_r},
                                {eye(1) / bounds.w2_bar, eye(4) / bounds.w3_bar, pi}, a_values,
                                rc, options, threads);
  if (!ok) throw InfeasibleError("attacked-error certificate: no feasible rate", 0.0);
  ErrorCertificate out;
  out.Pe = rc.P;
  out.a = rc.a;
  out.a1 = rc.a_i[0];
  out.a2 = rc.a_i[1];
  out.a3 = rc.a_i[2];
  out.alpha_inf_e = (3.0 - rc.a) / (1.0 - rc.a);
  out.objective = rc.objective;
  out.tolerance_feasible = rc.tolerance_feasible;
  out.verification = rc.verification;
  return out;
}

// ---------------------------------------------------------------------------

void check_decay_preconditions(double tau, double lambda_max) {
  if (!(lambda_max < 0.0)) throw ParameterError("decay rate bound must be negative");
  if (!(tau > 0.0)) throw ParameterError("driveline constant must be positive");
  if (!(tau < -1.0 / (3.0 * lambda_max))) {
    throw ParameterError("driveline constant too large for the requested decay rate");
  }
}

LmiProgram build_controller_program(const DiscretePlant& plant, const VehicleParams& params,
                                    const NoiseBounds& bounds, const Eigen::Matrix4d& pi,
                                    const Mat5& pe, double alpha_inf_e, double epsilon,
                                    double lambda_max, bool enforce_kd_upper, double a) {
  bounds.validate();
  check_rate(a, "a");
  const double tau = params.tau, lam = lambda_max;
  check_decay_preconditions(tau, lam);

  LmiProgram prog;
  const auto x = prog.add_symmetric("X", 5, true);
  const auto xt = prog.add_scalar("x_tilde", 0.0);
  const auto kt = prog.add_matrix("K_tilde", 1, 2);
  const auto rates = rate_split(prog, "a", 6, a);

  const AffineMatrix k1 = kt.block(0, 0, 1, 1), k2 = kt.block(0, 1, 1, 1);
  prog.add_linear("kp > 0", k1);
  prog.add_linear("kd > 0", k2);
  prog.add_linear("kd > tau kp", k2 - tau * k1);
  prog.add_linear("kd decay bound", k2 - (-2.0 * lam - 3.0 * tau * lam * lam) * xt);
  prog.add_linear("kp decay bound", k1 + lam * k2 + (lam * lam + tau * lam * lam * lam) * xt);
  if (enforce_kd_upper) prog.add_linear("kd < 1/(3 tau)", (1.0 / (3.0 * tau)) * xt - k2);
  // Hurwitz product test on the shifted polynomial p(s + lam); the two decay
  // bounds above only make its lower coefficients positive
  prog.add_linear("shifted hurwitz",
                  (1.0 + 3.0 * tau * lam) * (k2 + (2.0 * lam + 3.0 * tau * lam * lam) * xt) -
                      tau * (k1 + lam * k2 + (lam * lam + tau * lam * lam * lam) * xt));

  const double au = plant.au, bu = plant.bu;
  const Eigen::MatrixXd gp = plant.GammaPinv;
  const AffineMatrix p = AffineMatrix::block_diag({x, xt});
  const AffineMatrix pa = AffineMatrix::blocks(
      {{x * plant.A, x * plant.B1}, {bu * (kt * plant.C), au * xt}});
  const AffineMatrix zero5 = AffineMatrix(5, 1);
  const AffineMatrix pb = AffineMatrix::blocks(
      {{x * plant.B2, AffineMatrix(5, 2), zero5, AffineMatrix(5, 4), AffineMatrix(5, 4),
        AffineMatrix(5, 5)},
       {bu * xt, bu * kt, bu * xt, -bu * (kt * gp), bu * (kt * gp),
        -bu * (kt * (gp * plant.Ce))}});
  const double e_level = alpha_inf_e + epsilon;
  prog.add_lmi("closed-loop reach",
               reach_block(p, pa, pb, a,
                           {weight(one_minus(rates[0]), eye(1) / bounds.u_bar),
                            weight(one_minus(rates[1]), eye(2) / bounds.w1_bar),
                            weight(one_minus(rates[2]), eye(1) / bounds.w2_bar),
                            weight(one_minus(rates[3]), eye(4) / bounds.w3_bar),
                            weight(one_minus(rates[4]), pi),
                            weight(one_minus(rates[5]), pe / e_level)}));
  prog.add_logdet("X", 1.0, x);
  prog.add_logdet("x_tilde", 1.0, xt);
  prog.add_linear_objective(AffineMatrix::scalar(6.0 * std::log((6.0 - a) / (1.0 - a))));
  return prog;
}

ControllerResult synthesize_controller(const DiscretePlant& plant, const VehicleParams& params,
                                       const NoiseBounds& bounds, const Eigen::Matrix4d& pi,
                                       const Mat5& pe, double alpha_inf_e,
                                       const ControllerOptions& opt) {
  check_decay_preconditions(params.tau, opt.lambda_max);
  if (!(opt.epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  sdp::GridSpec grid{{"a"}, {opt.a_values}, opt.refinement_rounds, {}};
  auto res = sdp::grid_search(
      [&](const sdp::GridPoint& g) {
        return build_controller_program(plant, params, bounds, pi, pe, alpha_inf_e, opt.epsilon,
                                        opt.lambda_max, opt.enforce_kd_upper, g[0]);
      },
      grid, opt.solver, opt.threads);
  if (!res.feasible) throw_infeasible("controller", res);

  ControllerResult out;
  const auto& prog = res.program;
  const auto& x = res.solution.x;
  out.X = prog.value_of("X", x);
  out.x_tilde = prog.scalar_of("x_tilde", x);
  out.K_tilde = prog.value_of("K_tilde", x);
  out.K = out.K_tilde / out.x_tilde;
  out.Pzeta.setZero();
  out.Pzeta.topLeftCorner<5, 5>() = out.X;
  out.Pzeta(5, 5) = out.x_tilde;
  out.a = res.point[0];
  for (int i = 1; i <= 6; ++i) out.a_i.push_back(prog.scalar_of("a" + std::to_string(i), x));
  out.lambda_max = opt.lambda_max;
  out.alpha_inf_zeta = (6.0 - out.a) / (1.0 - out.a);
  out.objective = res.solution.objective;
  out.tolerance_feasible = res.solution.tolerance_feasible;
  out.verification = sdp::verify(prog, x, 1e-6);
  return out;
}

Eigen::Vector3cd eig_Ae(const Gain& k, double tau) {
  if (!(tau > 0.0)) throw ParameterError("driveline constant must be positive");
  Eigen::Matrix3d m;
  m << 0, 1, 0, 0, 0, 1, -k(0) / tau, -k(1) / tau, -1.0 / tau;
  return m.eigenvalues();
}

double ae_char_residual(const Gain& k, double tau, std::complex<double> s) {
  return std::abs(tau * s * s * s + s * s + k(1) * s + k(0));
}

std::vector<std::string> controller_gain_violations(const Gain& k, double tau, double lambda_max,
                                                    bool enforce_kd_upper) {
  const double kp = k(0), kd = k(1), lam = lambda_max;
  std::vector<std::string> v;
  if (!(kp > 0.0)) v.emplace_back("kp > 0");
  if (!(kd > 0.0)) v.emplace_back("kd > 0");
  if (!(kd > tau * kp)) v.emplace_back("kd > tau kp");
  if (!(kd > -2.0 * lam - 3.0 * tau * lam * lam)) v.emplace_back("kd decay bound");
  if (!(kp + lam * kd + lam * lam + tau * lam * lam * lam > 0.0)) v.emplace_back("kp decay bound");
  if (enforce_kd_upper && !(kd < 1.0 / (3.0 * tau))) v.emplace_back("kd < 1/(3 tau)");
  const double c2 = 1.0 + 3.0 * tau * lam, c1 = kd + 2.0 * lam + 3.0 * tau * lam * lam,
               c0 = kp + lam * kd + lam * lam + tau * lam * lam * lam;
  if (!(c2 * c1 > tau * c0)) v.emplace_back("shifted hurwitz");
  return v;
}

}  // namespace pshield
