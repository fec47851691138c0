#include <cmath>
#include <ostream>
#include <sstream>

#include "pshield/errors.hpp"
#include "pshield/sdp.hpp"

namespace pshield::sdp {

AffineMatrix::AffineMatrix(Index rows, Index cols)
    : rows_(rows), cols_(cols), constant_(Eigen::MatrixXd::Zero(rows, cols)) {}

AffineMatrix AffineMatrix::scalar(double value) {
  return AffineMatrix(Eigen::MatrixXd::Constant(1, 1, value));
}

void AffineMatrix::check_inner(Index a, Index b) {
  if (a != b) {
    std::ostringstream os;
    os << "affine product: inner dimensions " << a << " and " << b << " differ";
    throw DimensionError(os.str());
  }
}

void AffineMatrix::add_term(Index var, const Eigen::MatrixXd& coeff) {
  if (coeff.rows() != rows_ || coeff.cols() != cols_) {
    throw DimensionError("affine term has wrong shape");
  }
  auto [it, inserted] = terms_.try_emplace(var, coeff);
  if (!inserted) it->second += coeff;
}

Eigen::MatrixXd AffineMatrix::evaluate(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd out = constant_;
  for (const auto& [var, coeff] : terms_) {
    if (var >= x.size()) throw DimensionError("decision vector too short for expression");
    out += x(var) * coeff;
  }
  return out;
}

AffineMatrix AffineMatrix::transpose() const {
  AffineMatrix out(cols_, rows_);
  out.constant_ = constant_.transpose();
  for (const auto& [var, coeff] : terms_) out.terms_.emplace(var, coeff.transpose());
  return out;
}

AffineMatrix AffineMatrix::block(Index row, Index col, Index rows, Index cols) const {
  if (row < 0 || col < 0 || row + rows > rows_ || col + cols > cols_) {
    throw DimensionError("affine block out of range");
  }
  AffineMatrix out(rows, cols);
  out.constant_ = constant_.block(row, col, rows, cols);
  for (const auto& [var, coeff] : terms_) {
    Eigen::MatrixXd sub = coeff.block(row, col, rows, cols);
    if (!sub.isZero(0.0)) out.terms_.emplace(var, std::move(sub));
  }
  return out;
}

bool AffineMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  auto close = [tol](const Eigen::MatrixXd& m) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
  };
  if (!close(constant_)) return false;
  for (const auto& [var, coeff] : terms_) {
    if (!close(coeff)) return false;
  }
  return true;
}

AffineMatrix AffineMatrix::symmetrized() const {
  AffineMatrix out(rows_, cols_);
  out.constant_ = 0.5 * (constant_ + constant_.transpose());
  for (const auto& [var, coeff] : terms_) {
    out.terms_.emplace(var, 0.5 * (coeff + coeff.transpose()));
  }
  return out;
}

AffineMatrix& AffineMatrix::operator+=(const AffineMatrix& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_) {
    std::ostringstream os;
    os << "affine sum: " << rows_ << "x" << cols_ << " vs " << other.rows_ << "x"
       << other.cols_;
    throw DimensionError(os.str());
  }
  constant_ += other.constant_;
  for (const auto& [var, coeff] : other.terms_) add_term(var, coeff);
  return *this;
}

AffineMatrix& AffineMatrix::operator-=(const AffineMatrix& other) {
  return *this += -other;
}

AffineMatrix& AffineMatrix::operator*=(double s) {
  constant_ *= s;
  for (auto& [var, coeff] : terms_) coeff *= s;
  return *this;
}

AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b) { return a += b; }
AffineMatrix operator-(AffineMatrix a, const AffineMatrix& b) { return a -= b; }
AffineMatrix operator-(AffineMatrix a) { return a *= -1.0; }
AffineMatrix operator*(double s, AffineMatrix a) { return a *= s; }
AffineMatrix operator*(AffineMatrix a, double s) { return a *= s; }

AffineMatrix AffineMatrix::blocks(const std::vector<std::vector<AffineMatrix>>& grid) {
  const std::size_t nr = grid.size();
  if (nr == 0) return {};
  const std::size_t nc = grid.front().size();
  std::vector<Index> heights(nr, -1), widths(nc, -1);
  for (std::size_t i = 0; i < nr; ++i) {
    if (grid[i].size() != nc) throw DimensionError("block grid rows have unequal length");
    for (std::size_t j = 0; j < nc; ++j) {
      const auto& b = grid[i][j];
      if (b.rows() == 0 && b.cols() == 0) continue;
      auto fix = [](Index& slot, Index v) {
        if (slot >= 0 && slot != v) throw DimensionError("block grid sizes are inconsistent");
        slot = v;
      };
      fix(heights[i], b.rows());
      fix(widths[j], b.cols());
    }
  }
  Index total_r = 0, total_c = 0;
  for (auto h : heights) {
    if (h < 0) throw DimensionError("block row size cannot be inferred");
    total_r += h;
  }
  for (auto w : widths) {
    if (w < 0) throw DimensionError("block column size cannot be inferred");
    total_c += w;
  }

  AffineMatrix out(total_r, total_c);
  Index r0 = 0;
  for (std::size_t i = 0; i < nr; ++i) {
    Index c0 = 0;
    for (std::size_t j = 0; j < nc; ++j) {
      const auto& b = grid[i][j];
      if (b.rows() > 0 || b.cols() > 0) {
        out.constant_.block(r0, c0, b.rows(), b.cols()) = b.constant_;
        for (const auto& [var, coeff] : b.terms_) {
          auto [it, inserted] =
              out.terms_.try_emplace(var, Eigen::MatrixXd::Zero(total_r, total_c));
          it->second.block(r0, c0, b.rows(), b.cols()) += coeff;
        }
      }
      c0 += widths[j];
    }
    r0 += heights[i];
  }
  return out;
}

AffineMatrix AffineMatrix::block_diag(const std::vector<AffineMatrix>& diag) {
  std::vector<std::vector<AffineMatrix>> grid(diag.size(),
                                              std::vector<AffineMatrix>(diag.size()));
  for (std::size_t i = 0; i < diag.size(); ++i) {
    for (std::size_t j = 0; j < diag.size(); ++j) {
      grid[i][j] = i == j ? diag[i] : AffineMatrix(diag[i].rows(), diag[j].cols());
    }
  }
  return blocks(grid);
}

AffineMatrix AffineMatrix::kron(const AffineMatrix& s, const Eigen::MatrixXd& m) {
  if (s.rows() != 1 || s.cols() != 1) throw DimensionError("kron: left factor must be 1x1");
  AffineMatrix out(m.rows(), m.cols());
  out.constant_ = s.constant_(0, 0) * m;
  for (const auto& [var, coeff] : s.terms_) out.terms_.emplace(var, coeff(0, 0) * m);
  return out;
}

// ---------------------------------------------------------------------------

Index LmiProgram::allocate(const std::string& name, VariableKind kind, Index rows, Index cols,
                           Index count) {
  if (find_variable(name) != nullptr) {
    throw ParameterError("duplicate variable name '" + name + "'");
  }
  const Index offset = num_vars_;
  variables_.push_back({name, kind, rows, cols, offset, count});
  num_vars_ += count;
  objective_.conservativeResize(num_vars_);
  objective_.tail(count).setZero();
  return offset;
}

AffineMatrix LmiProgram::add_scalar(const std::string& name, double lower, double upper) {
  if (!(lower < upper)) throw ParameterError("scalar '" + name + "': empty interval");
  const Index v = allocate(name, VariableKind::scalar, 1, 1, 1);
  AffineMatrix s(1, 1);
  s.add_term(v, Eigen::MatrixXd::Ones(1, 1));
  if (std::isfinite(lower)) add_linear(name + " > lower", s - AffineMatrix::scalar(lower));
  if (std::isfinite(upper)) add_linear(name + " < upper", AffineMatrix::scalar(upper) - s);
  return s;
}

AffineMatrix LmiProgram::add_symmetric(const std::string& name, Index n, bool positive_definite) {
  if (n <= 0) throw DimensionError("symmetric variable needs positive size");
  const Index v = allocate(name, VariableKind::symmetric, n, n, n * (n + 1) / 2);
  AffineMatrix p(n, n);
  Index k = v;
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i, ++k) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
      e(i, j) = 1.0;
      e(j, i) = 1.0;
      p.add_term(k, e);
    }
  }
  if (positive_definite) {
    constraints_.push_back({name + " > 0", ConstraintKind::floor,
                            p - AffineMatrix(kStrictMargin * Eigen::MatrixXd::Identity(n, n))});
  }
  return p;
}

AffineMatrix LmiProgram::add_matrix(const std::string& name, Index rows, Index cols) {
  if (rows <= 0 || cols <= 0) throw DimensionError("matrix variable needs positive size");
  const Index v = allocate(name, VariableKind::full, rows, cols, rows * cols);
  AffineMatrix m(rows, cols);
  Index k = v;
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i, ++k) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(rows, cols);
      e(i, j) = 1.0;
      m.add_term(k, e);
    }
  }
  return m;
}

void LmiProgram::add_lmi(const std::string& name, const AffineMatrix& f) {
  if (!f.is_symmetric(1e-9)) throw DimensionError("LMI '" + name + "' is not symmetric");
  constraints_.push_back({name, ConstraintKind::lmi, f.symmetrized()});
}

void LmiProgram::add_linear(const std::string& name, const AffineMatrix& g) {
  if (g.rows() != 1 || g.cols() != 1) {
    throw DimensionError("linear constraint '" + name + "' must be scalar");
  }
  constraints_.push_back({name, ConstraintKind::linear, g});
}

void LmiProgram::add_linear_objective(const AffineMatrix& g) {
  if (g.rows() != 1 || g.cols() != 1) throw DimensionError("objective term must be scalar");
  objective_constant_ += g.constant()(0, 0);
  for (const auto& [var, coeff] : g.terms()) objective_(var) += coeff(0, 0);
}

void LmiProgram::add_logdet(const std::string& label, double weight, const AffineMatrix& m) {
  if (!(weight > 0.0)) throw ParameterError("log det weight must be positive");
  if (!m.is_symmetric(1e-9)) throw DimensionError("log det argument must be symmetric");
  logdets_.push_back({label, weight, m.symmetrized()});
}

double LmiProgram::objective_value(const Eigen::VectorXd& x) const {
  double f = objective_.dot(x) + objective_constant_;
  for (const auto& term : logdets_) {
    const Eigen::LLT<Eigen::MatrixXd> llt(term.m.evaluate(x));
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    f -= term.weight * 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  return f;
}

const VariableInfo* LmiProgram::find_variable(const std::string& name) const {
  for (const auto& v : variables_) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

Eigen::MatrixXd LmiProgram::value_of(const std::string& name, const Eigen::VectorXd& x) const {
  const VariableInfo* v = find_variable(name);
  if (v == nullptr) throw ParameterError("unknown variable '" + name + "'");
  if (x.size() < v->offset + v->count) throw DimensionError("decision vector too short");
  Eigen::MatrixXd m(v->rows, v->cols);
  Index k = v->offset;
  if (v->kind == VariableKind::symmetric) {
    for (Index j = 0; j < v->cols; ++j) {
      for (Index i = j; i < v->rows; ++i, ++k) m(i, j) = m(j, i) = x(k);
    }
  } else {
    for (Index j = 0; j < v->cols; ++j) {
      for (Index i = 0; i < v->rows; ++i, ++k) m(i, j) = x(k);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iterations: return "max_iterations";
  }
  return "unknown";
}

namespace {

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

const char* kind_name(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::lmi: return "lmi";
    case ConstraintKind::floor: return "floor";
    case ConstraintKind::linear: return "linear";
  }
  return "?";
}

}  // namespace

VerifyReport verify(const LmiProgram& program, const Eigen::VectorXd& x, double feas_tol) {
  VerifyReport report;
  report.pass = x.size() == program.num_variables() && x.allFinite();
  for (const auto& c : program.constraints()) {
    const double lam = min_eigenvalue(c.f.evaluate(x));
    report.entries.push_back({c.name, c.kind, c.f.rows(), lam});
    report.worst = std::min(report.worst, lam);
    const bool ok = c.kind == ConstraintKind::lmi ? lam >= -feas_tol : lam > 0.0;
    report.pass = report.pass && ok;
  }
  return report;
}

void write_text(std::ostream& os, const LmiProgram& program) {
  os.precision(17);
  os << "variables " << program.num_variables() << "\n";
  for (const auto& v : program.variables()) {
    os << "var " << v.name << " offset " << v.offset << " count " << v.count << " shape "
       << v.rows << "x" << v.cols << "\n";
  }
  os << "objective_constant " << program.objective_constant() << "\n";
  os << "objective_linear";
  for (Index i = 0; i < program.num_variables(); ++i) os << " " << program.linear_objective()(i);
  os << "\n";
  auto dump = [&os](const AffineMatrix& f) {
    auto mat = [&os](const Eigen::MatrixXd& m) {
      for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) os << (j ? " " : "  ") << m(i, j);
        os << "\n";
      }
    };
    os << " F0\n";
    mat(f.constant());
    for (const auto& [var, coeff] : f.terms()) {
      os << " F" << var + 1 << "\n";
      mat(coeff);
    }
  };
  for (const auto& t : program.logdet_terms()) {
    os << "logdet " << t.label << " weight " << t.weight << " size " << t.m.rows() << "\n";
    dump(t.m);
  }
  for (const auto& c : program.constraints()) {
    os << "constraint " << c.name << " kind " << kind_name(c.kind) << " size " << c.f.rows()
       << "\n";
    dump(c.f);
  }
}

}  // namespace pshield::sdp
