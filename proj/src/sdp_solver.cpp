#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pshield/errors.hpp"
#include "pshield/sdp.hpp"

namespace pshield::sdp {

namespace {

constexpr double kMu = 10.0;
constexpr double kPhaseBox = 1e8;
constexpr double kUnbounded = 1e12;
// Phase-I shift below which a program counts as strictly feasible.
constexpr double kStrictShift = 1e-6;
constexpr double kPhase1Gap = 1e-11;

struct Block {
  Eigen::MatrixXd f0;
  std::vector<Index> vars;
  std::vector<Eigen::MatrixXd> coeffs;
  double weight = 1.0;

  Index size() const { return f0.rows(); }
  Eigen::MatrixXd at(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd m = f0;
    for (std::size_t k = 0; k < vars.size(); ++k) m += x(vars[k]) * coeffs[k];
    return m;
  }
};

Block compile(const AffineMatrix& f, double shift = 0.0, double weight = 1.0) {
  Block b;
  b.f0 = f.constant();
  b.f0.diagonal().array() += shift;
  b.weight = weight;
  for (const auto& [var, coeff] : f.terms()) {
    if (coeff.isZero(0.0)) continue;
    b.vars.push_back(var);
    b.coeffs.push_back(coeff);
  }
  return b;
}

// minimize  c'x - sum_j w_j log det G_j(x)  over  F_i(x) > 0.
struct Problem {
  Index n = 0;
  Eigen::VectorXd c;
  std::vector<Block> barrier;
  std::vector<Block> logdet;

  double theta() const {
    double s = 0.0;
    for (const auto& b : barrier) s += b.weight * static_cast<double>(b.size());
    return s;
  }
};

struct Eval {
  double f = 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
};

bool log_det(const Eigen::MatrixXd& m, double& out, Eigen::LLT<Eigen::MatrixXd>& llt) {
  llt.compute(m);
  if (llt.info() != Eigen::Success) return false;
  out = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return std::isfinite(out);
}

// phi_t(x) = t (c'x - sum w log det G) - sum log det F; false outside the domain.
bool evaluate(const Problem& p, const Eigen::VectorXd& x, double t, bool derivs, Eval& out) {
  out.f = t * p.c.dot(x);
  if (derivs) {
    out.g = t * p.c;
    out.h.setZero(p.n, p.n);
  }
  Eigen::LLT<Eigen::MatrixXd> llt;
  std::vector<Eigen::MatrixXd> s;
  auto accumulate = [&](const Block& b, double w) {
    double ld = 0.0;
    if (!log_det(b.at(x), ld, llt)) return false;
    out.f -= w * ld;
    if (!derivs) return true;
    const auto lower = llt.matrixL();
    const std::size_t nv = b.vars.size();
    s.resize(nv);
    for (std::size_t k = 0; k < nv; ++k) {
      const Eigen::MatrixXd half = lower.solve(b.coeffs[k]);
      s[k] = lower.solve(half.transpose());
    }
    for (std::size_t k = 0; k < nv; ++k) {
      const Index vk = b.vars[k];
      out.g(vk) -= w * s[k].trace();
      for (std::size_t l = 0; l <= k; ++l) {
        const double v = w * s[k].cwiseProduct(s[l]).sum();
        out.h(vk, b.vars[l]) += v;
        if (l != k) out.h(b.vars[l], vk) += v;
      }
    }
    return true;
  };
  for (const auto& b : p.logdet) {
    if (!accumulate(b, t * b.weight)) return false;
  }
  for (const auto& b : p.barrier) {
    if (!accumulate(b, b.weight)) return false;
  }
  return std::isfinite(out.f);
}

double objective(const Problem& p, const Eigen::VectorXd& x) {
  double f = p.c.dot(x);
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (const auto& b : p.logdet) {
    double ld = 0.0;
    if (!log_det(b.at(x), ld, llt)) return std::numeric_limits<double>::infinity();
    f -= b.weight * ld;
  }
  return f;
}

// Jacobi-scaled Newton direction with regularization on factorization failure.
Eigen::VectorXd newton_direction(const Eigen::MatrixXd& h, const Eigen::VectorXd& g) {
  const Index n = g.size();
  Eigen::VectorXd d(n);
  for (Index i = 0; i < n; ++i) {
    const double hii = h(i, i);
    d(i) = hii > 0.0 && std::isfinite(hii) ? 1.0 / std::sqrt(hii) : 1.0;
  }
  Eigen::MatrixXd hs = d.asDiagonal() * h * d.asDiagonal();
  const Eigen::VectorXd gs = d.cwiseProduct(g);
  Eigen::LLT<Eigen::MatrixXd> llt(hs);
  double reg = 1e-13;
  while (llt.info() != Eigen::Success && reg < 1.0) {
    hs.diagonal().array() += reg;
    llt.compute(hs);
    reg *= 10.0;
  }
  if (llt.info() != Eigen::Success) return Eigen::VectorXd::Zero(n);
  return d.cwiseProduct(llt.solve(-gs));
}

enum class PathEnd { converged, stopped, unbounded, budget };

struct PathResult {
  Eigen::VectorXd x;
  PathEnd end;
  double t;
};

// Barrier path following from a strictly feasible x. `stop(x, t, centered)`
// ends the run early.
PathResult follow_path(const Problem& p, Eigen::VectorXd x, double gap_tol, bool relative_gap,
                       int& budget,
                       const std::function<bool(const Eigen::VectorXd&, double, bool)>& stop) {
  const double theta = p.theta();
  double t = 1.0;
  Eval cur, trial;
  for (;;) {
    for (int inner = 0; inner < 100; ++inner) {
      if (budget <= 0) return {x, PathEnd::budget, t};
      --budget;
      if (!evaluate(p, x, t, true, cur)) return {x, PathEnd::budget, t};
      const Eigen::VectorXd dx = newton_direction(cur.h, cur.g);
      const double lam2 = -cur.g.dot(dx);
      if (!(lam2 > 1e-10)) break;

      double alpha = 1.0;
      bool ok = false;
      while (alpha > 1e-18) {
        if (evaluate(p, x + alpha * dx, t, false, trial) &&
            trial.f <= cur.f - 0.25 * alpha * lam2) {
          ok = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!ok) break;  // no further progress at this t
      x += alpha * dx;
      if (x.cwiseAbs().maxCoeff() > kUnbounded) return {x, PathEnd::unbounded, t};
      if (stop && stop(x, t, false)) return {x, PathEnd::stopped, t};
    }
    if (stop && stop(x, t, true)) return {x, PathEnd::stopped, t};
    const double scale = relative_gap ? std::max(1.0, std::abs(objective(p, x))) : 1.0;
    if (theta / t <= gap_tol * scale || t > 1e18) return {x, PathEnd::converged, t};
    t *= kMu;
  }
}

double min_eig(const Eigen::MatrixXd& m) {
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Phase-I style problem over (x, s): minimize s with `relaxed` blocks shifted
// by s*I, `hard` blocks kept strict, s > -1 and a box on x.
struct ShiftResult {
  Eigen::VectorXd x;  // without s
  double s;
  PathEnd end;
};

ShiftResult minimize_shift(Index n, const std::vector<Block>& relaxed,
                           const std::vector<Block>& hard, const Eigen::VectorXd& x0,
                           double stop_below, double give_up_above, int& budget) {
  Problem p;
  p.n = n + 1;
  p.c = Eigen::VectorXd::Zero(p.n);
  p.c(n) = 1.0;
  const Index si = n;

  double worst = 0.0;
  for (const auto& b : relaxed) {
    Block a = b;
    a.vars.push_back(si);
    a.coeffs.push_back(Eigen::MatrixXd::Identity(b.size(), b.size()));
    worst = std::max(worst, -min_eig(b.at(x0)));
    p.barrier.push_back(std::move(a));
  }
  for (const auto& b : hard) p.barrier.push_back(b);

  auto scalar_block = [&](Index var, double coeff, double constant) {
    Block b;
    b.f0 = Eigen::MatrixXd::Constant(1, 1, constant);
    b.vars = {var};
    b.coeffs = {Eigen::MatrixXd::Constant(1, 1, coeff)};
    p.barrier.push_back(std::move(b));
  };
  scalar_block(si, 1.0, 1.0);  // s > -1
  for (Index i = 0; i < n; ++i) {
    scalar_block(i, 1.0, kPhaseBox);
    scalar_block(i, -1.0, kPhaseBox);
  }

  Eigen::VectorXd z(p.n);
  z.head(n) = x0.cwiseMax(-0.5 * kPhaseBox).cwiseMin(0.5 * kPhaseBox);
  z(si) = worst + 1.0;

  auto stop = [&](const Eigen::VectorXd& v, double t, bool centered) {
    if (v(si) < stop_below) return true;
    return centered && v(si) - p.theta() / t > give_up_above;
  };
  const auto r = follow_path(p, z, kPhase1Gap, false, budget, stop);
  return {r.x.head(n), r.x(si), r.end};
}

void fill_report(const LmiProgram& program, SdpSolution& sol) {
  sol.min_eigenvalues.clear();
  for (const auto& c : program.constraints()) sol.min_eigenvalues.push_back(min_eig(c.f.evaluate(sol.x)));
}

struct Prepared {
  Index n = 0;
  std::vector<Block> relaxable;  // program LMIs
  std::vector<Block> hard;       // floors, linear constraints, log det domains
};

Prepared prepare(const LmiProgram& program) {
  Prepared pr;
  pr.n = program.num_variables();
  for (const auto& c : program.constraints()) {
    if (c.kind == ConstraintKind::lmi) {
      pr.relaxable.push_back(compile(c.f));
    } else {
      pr.hard.push_back(compile(c.f));
    }
  }
  return pr;
}

// Finds a start point; returns false with `sol` filled as infeasible.
bool find_start(const LmiProgram& program, const Prepared& pr, const SolverOptions& opt,
                int& budget, Eigen::VectorXd& x, double& shift, SdpSolution& sol) {
  x = Eigen::VectorXd::Zero(pr.n);
  std::vector<Block> domains = pr.hard;
  for (const auto& t : program.logdet_terms()) domains.push_back(compile(t.m));

  // Phase 0: strict constraints that are never relaxed.
  bool hard_ok = true;
  for (const auto& b : domains) hard_ok = hard_ok && min_eig(b.at(x)) > 0.0;
  if (!hard_ok) {
    const auto r0 = minimize_shift(pr.n, domains, {}, x, -1e-3, 0.0, budget);
    x = r0.x;
    if (!(r0.s < 0.0)) {
      sol.status = r0.end == PathEnd::budget ? SolveStatus::max_iterations : SolveStatus::infeasible;
      sol.x = x;
      sol.infeasibility = r0.s;
      return false;
    }
  }

  // Phase I: smallest uniform shift making every program LMI feasible.
  shift = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& b : pr.relaxable) margin = std::min(margin, min_eig(b.at(x)));
  sol.infeasibility = -margin;
  if (margin > kStrictShift) return true;

  const auto r1 = minimize_shift(pr.n, pr.relaxable, domains, x, -kStrictShift,
                                 0.9 * opt.feas_tol, budget);
  x = r1.x;
  sol.infeasibility = r1.s;
  if (r1.s < -kStrictShift) return true;
  if (r1.end == PathEnd::budget || r1.end == PathEnd::unbounded) {
    sol.status = SolveStatus::max_iterations;
    sol.x = x;
    return false;
  }
  if (r1.s < 0.9 * opt.feas_tol) {
    shift = opt.feas_tol;
    sol.tolerance_feasible = r1.s >= 0.0;
    return true;
  }
  sol.status = SolveStatus::infeasible;
  sol.x = x;
  return false;
}

Problem phase2_problem(const LmiProgram& program, const Prepared& pr, double shift) {
  Problem p;
  p.n = pr.n;
  p.c = program.linear_objective();
  for (const auto& c : program.constraints()) {
    p.barrier.push_back(compile(c.f, c.kind == ConstraintKind::lmi ? shift : 0.0));
  }
  for (const auto& t : program.logdet_terms()) p.logdet.push_back(compile(t.m, 0.0, t.weight));
  return p;
}

SdpSolution finish(const LmiProgram& program, SdpSolution sol, const PathResult& r, int used) {
  sol.x = r.x;
  sol.newton_steps = used;
  sol.objective = program.objective_value(sol.x);
  switch (r.end) {
    case PathEnd::converged:
    case PathEnd::stopped: sol.status = SolveStatus::optimal; break;
    case PathEnd::unbounded:
    case PathEnd::budget: sol.status = SolveStatus::max_iterations; break;
  }
  fill_report(program, sol);
  return sol;
}

// Minimizes f along x + g (y - x), g in [0, 1]; f is convex on the segment.
double segment_search(const std::function<double(double)>& f) {
  double lo = 0.0, hi = 1.0;
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - ratio * (hi - lo), b = lo + ratio * (hi - lo);
  double fa = f(a), fb = f(b);
  for (int i = 0; i < 60 && hi - lo > 1e-10; ++i) {
    if (fa <= fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - ratio * (hi - lo);
      fa = f(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + ratio * (hi - lo);
      fb = f(b);
    }
  }
  const double g = 0.5 * (lo + hi);
  const double f0 = f(0.0), f1 = f(1.0), fg = f(g);
  if (f0 <= fg && f0 <= f1) return 0.0;
  return f1 < fg ? 1.0 : g;
}

SdpSolution solve_linearized(const LmiProgram& program, const Prepared& pr,
                             const SolverOptions& opt, int budget, SdpSolution sol,
                             const Eigen::VectorXd& start, double shift) {
  const int initial_budget = budget;
  Problem base = phase2_problem(program, pr, shift);
  for (const auto& t : program.logdet_terms()) base.barrier.push_back(compile(t.m));
  base.logdet.clear();

  auto linear_subproblem = [&](const std::vector<Eigen::MatrixXd>& anchors,
                               const Eigen::VectorXd& x0) {
    Problem p = base;
    // -w log det G(x) ~ const + w tr(G0^{-1} (G0 - G(x)))
    const auto& terms = program.logdet_terms();
    for (std::size_t j = 0; j < terms.size(); ++j) {
      for (const auto& [var, coeff] : terms[j].m.terms()) {
        p.c(var) -= terms[j].weight * anchors[j].cwiseProduct(coeff).sum();
      }
    }
    return follow_path(p, x0, opt.gap_tol, true, budget, nullptr);
  };

  std::vector<Eigen::MatrixXd> anchors;
  for (const auto& t : program.logdet_terms()) {
    anchors.push_back(Eigen::MatrixXd::Identity(t.m.rows(), t.m.rows()));
  }
  auto r = linear_subproblem(anchors, start);
  if (r.end == PathEnd::unbounded || r.end == PathEnd::budget) {
    return finish(program, sol, r, initial_budget - budget);
  }
  Eigen::VectorXd x = r.x;
  double fx = program.objective_value(x);
  sol.objective_trace.push_back(fx);

  for (int it = 1; it < opt.linearized_max_iters; ++it) {
    anchors.clear();
    for (const auto& t : program.logdet_terms()) {
      anchors.push_back(t.m.evaluate(x).llt().solve(
          Eigen::MatrixXd::Identity(t.m.rows(), t.m.rows())));
    }
    const auto rs = linear_subproblem(anchors, x);
    if (rs.end == PathEnd::unbounded || rs.end == PathEnd::budget) break;
    const Eigen::VectorXd dir = rs.x - x;
    const double g = segment_search(
        [&](double s) { return program.objective_value(x + s * dir); });
    const Eigen::VectorXd next = x + g * dir;
    const double fn = program.objective_value(next);
    if (!(fn <= fx)) break;
    const double change = std::abs(fx - fn) / std::max(1.0, std::abs(fx));
    x = next;
    fx = fn;
    sol.objective_trace.push_back(fx);
    if (change < opt.linearized_rel_tol) break;
  }
  return finish(program, sol, {x, PathEnd::converged, 0.0}, initial_budget - budget);
}

}  // namespace

SdpSolution solve(const LmiProgram& program, const SolverOptions& options) {
  if (!(options.feas_tol > 0.0) || !(options.gap_tol > 0.0) || options.max_newton_steps <= 0) {
    throw ParameterError("solver options must be positive");
  }
  const Prepared pr = prepare(program);
  int budget = options.max_newton_steps;
  SdpSolution sol;

  Eigen::VectorXd x;
  double shift = 0.0;
  if (!find_start(program, pr, options, budget, x, shift, sol)) {
    sol.newton_steps = options.max_newton_steps - budget;
    fill_report(program, sol);
    return sol;
  }

  if (program.logdet_terms().empty() && program.linear_objective().isZero(0.0)) {
    return finish(program, sol, {x, PathEnd::converged, 0.0}, options.max_newton_steps - budget);
  }
  if (options.logdet_mode == LogDetMode::linearized && !program.logdet_terms().empty()) {
    return solve_linearized(program, pr, options, budget, sol, x, shift);
  }
  const Problem p = phase2_problem(program, pr, shift);
  const auto r = follow_path(p, x, options.gap_tol, true, budget, nullptr);
  return finish(program, sol, r, options.max_newton_steps - budget);
}

}  // namespace pshield::sdp
