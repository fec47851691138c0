#pragma once

// Small dense semidefinite programs with linear and weighted -log det
// objectives, solved by a primal log-barrier path-following method.

#include <Eigen/Dense>

#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace pshield::sdp {

using Eigen::Index;

/// Matrix-valued affine function  F(x) = F0 + sum_k x_k F_k  of the decision
/// vector x. Coefficients are stored densely per participating variable.
class AffineMatrix {
 public:
  AffineMatrix() = default;
  AffineMatrix(Index rows, Index cols);
  template <typename Derived>
  AffineMatrix(const Eigen::MatrixBase<Derived>& constant)  // NOLINT: implicit by design
      : rows_(constant.rows()), cols_(constant.cols()), constant_(constant) {}

  /// 1 x 1 constant.
  static AffineMatrix scalar(double value);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const Eigen::MatrixXd& constant() const { return constant_; }
  const std::map<Index, Eigen::MatrixXd>& terms() const { return terms_; }

  /// Accumulates `coeff` onto the coefficient of variable `var`.
  void add_term(Index var, const Eigen::MatrixXd& coeff);

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;
  AffineMatrix transpose() const;
  AffineMatrix block(Index row, Index col, Index rows, Index cols) const;
  bool is_symmetric(double tol = 1e-12) const;
  /// (F + F') / 2, removing rounding asymmetry.
  AffineMatrix symmetrized() const;

  AffineMatrix& operator+=(const AffineMatrix& other);
  AffineMatrix& operator-=(const AffineMatrix& other);
  AffineMatrix& operator*=(double s);

  /// Block matrix from a row-major grid of blocks; an empty (0x0) entry is a
  /// zero block whose size is inferred from its row and column.
  static AffineMatrix blocks(const std::vector<std::vector<AffineMatrix>>& grid);
  static AffineMatrix block_diag(const std::vector<AffineMatrix>& diag);

  /// s * M for a 1x1 affine scalar s and constant matrix M.
  static AffineMatrix kron(const AffineMatrix& s, const Eigen::MatrixXd& m);

  template <typename Derived>
  AffineMatrix left_multiplied(const Eigen::MatrixBase<Derived>& m) const {
    AffineMatrix out(m.rows(), cols_);
    check_inner(m.cols(), rows_);
    out.constant_ = m * constant_;
    for (const auto& [var, coeff] : terms_) out.terms_.emplace(var, m * coeff);
    return out;
  }
  template <typename Derived>
  AffineMatrix right_multiplied(const Eigen::MatrixBase<Derived>& m) const {
    AffineMatrix out(rows_, m.cols());
    check_inner(cols_, m.rows());
    out.constant_ = constant_ * m;
    for (const auto& [var, coeff] : terms_) out.terms_.emplace(var, coeff * m);
    return out;
  }

 private:
  static void check_inner(Index a, Index b);

  Index rows_ = 0;
  Index cols_ = 0;
  Eigen::MatrixXd constant_;
  std::map<Index, Eigen::MatrixXd> terms_;
};

AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b);
AffineMatrix operator-(AffineMatrix a, const AffineMatrix& b);
AffineMatrix operator-(AffineMatrix a);
AffineMatrix operator*(double s, AffineMatrix a);
AffineMatrix operator*(AffineMatrix a, double s);

template <typename Derived>
AffineMatrix operator*(const Eigen::MatrixBase<Derived>& m, const AffineMatrix& a) {
  return a.left_multiplied(m);
}
template <typename Derived>
AffineMatrix operator*(const AffineMatrix& a, const Eigen::MatrixBase<Derived>& m) {
  return a.right_multiplied(m);
}

// ---------------------------------------------------------------------------

enum class VariableKind { scalar, symmetric, full };

struct VariableInfo {
  std::string name;
  VariableKind kind;
  Index rows;
  Index cols;
  Index offset;  // first decision-vector index
  Index count;   // decision-vector entries used
};

enum class ConstraintKind {
  lmi,     // F(x) >= 0; may be accepted within the feasibility tolerance
  floor,   // P - margin I >= 0 realizing P > 0; always enforced strictly
  linear,  // scalar g(x) >= 0; always enforced strictly
};

struct Constraint {
  std::string name;
  ConstraintKind kind;
  AffineMatrix f;
};

struct LogDetTerm {
  std::string label;
  double weight;
  AffineMatrix m;
};

class LmiProgram {
 public:
  /// Margin used for strict definiteness P > 0 (realized as P >= margin I).
  static constexpr double kStrictMargin = 1e-8;
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  /// Scalar variable with open box (lower, upper); infinite ends are omitted.
  AffineMatrix add_scalar(const std::string& name, double lower = -kInf, double upper = kInf);
  /// Symmetric n x n variable; `positive_definite` adds the P > 0 floor.
  AffineMatrix add_symmetric(const std::string& name, Index n, bool positive_definite);
  /// Unstructured rows x cols variable.
  AffineMatrix add_matrix(const std::string& name, Index rows, Index cols);

  /// Constrain the symmetric block `f` to be positive semidefinite.
  void add_lmi(const std::string& name, const AffineMatrix& f);
  /// Constrain the 1x1 expression `g` to be strictly positive.
  void add_linear(const std::string& name, const AffineMatrix& g);

  /// objective += g (1x1)
  void add_linear_objective(const AffineMatrix& g);
  /// objective += -weight * log det(m)
  void add_logdet(const std::string& label, double weight, const AffineMatrix& m);

  Index num_variables() const { return num_vars_; }
  const std::vector<VariableInfo>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<LogDetTerm>& logdet_terms() const { return logdets_; }
  /// Linear objective coefficients c (objective = c'x + c0 - sum w log det).
  const Eigen::VectorXd& linear_objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }

  /// Objective at x (infinite when a log-det argument is not positive definite).
  double objective_value(const Eigen::VectorXd& x) const;
  const VariableInfo* find_variable(const std::string& name) const;
  /// Value of the named variable at x (throws ParameterError if unknown).
  Eigen::MatrixXd value_of(const std::string& name, const Eigen::VectorXd& x) const;
  double scalar_of(const std::string& name, const Eigen::VectorXd& x) const {
    return value_of(name, x)(0, 0);
  }

 private:
  Index allocate(const std::string& name, VariableKind kind, Index rows, Index cols, Index count);

  Index num_vars_ = 0;
  std::vector<VariableInfo> variables_;
  std::vector<Constraint> constraints_;
  std::vector<LogDetTerm> logdets_;
  Eigen::VectorXd objective_;
  double objective_constant_ = 0.0;
};

// ---------------------------------------------------------------------------

enum class SolveStatus { optimal, infeasible, max_iterations };
const char* to_string(SolveStatus s);

enum class LogDetMode {
  barrier,     // log det terms handled natively in the barrier subproblems
  linearized,  // sequence of linear-objective SDPs around the current iterate
};

struct SolverOptions {
  double feas_tol = 1e-8;        // accepted LMI violation (absolute min eigenvalue)
  double gap_tol = 1e-8;         // barrier duality-gap bound, relative to max(1,|f|)
  int max_newton_steps = 4000;   // across all phases
  LogDetMode logdet_mode = LogDetMode::barrier;
  int linearized_max_iters = 20;
  double linearized_rel_tol = 1e-4;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::infeasible;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::infinity();
  /// Min eigenvalue (or slack) per program constraint, in program order.
  std::vector<double> min_eigenvalues;
  /// Optimal phase-I shift: < 0 means a strictly feasible point exists.
  double infeasibility = std::numeric_limits<double>::quiet_NaN();
  /// Only reachable within the feasibility tolerance (no strict interior).
  bool tolerance_feasible = false;
  int newton_steps = 0;
  /// True objective after each outer iteration of LogDetMode::linearized.
  std::vector<double> objective_trace;

  bool ok() const { return status == SolveStatus::optimal; }
  Eigen::MatrixXd value(const AffineMatrix& e) const { return e.evaluate(x); }
  double scalar(const AffineMatrix& e) const { return e.evaluate(x)(0, 0); }
};

SdpSolution solve(const LmiProgram& program, const SolverOptions& options = {});

struct VerifyEntry {
  std::string name;
  ConstraintKind kind;
  Index size;
  double min_eigenvalue;  // slack for linear constraints
};

struct VerifyReport {
  std::vector<VerifyEntry> entries;
  double worst = std::numeric_limits<double>::infinity();
  bool pass = false;
};

/// Recomputes every constraint at the solution; passes when each block's min
/// eigenvalue is >= -feas_tol and each linear slack is > 0.
VerifyReport verify(const LmiProgram& program, const Eigen::VectorXd& x, double feas_tol);
inline VerifyReport verify(const LmiProgram& program, const SdpSolution& s, double feas_tol) {
  return verify(program, s.x, feas_tol);
}

/// Plain-text dump (named blocks with numeric entries) for cross-checking
/// with external solvers.
void write_text(std::ostream& os, const LmiProgram& program);

}  // namespace pshield::sdp
