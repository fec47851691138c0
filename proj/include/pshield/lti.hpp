#pragma once

// Small dense linear-time-invariant toolkit: matrix exponential, exact
// zero-order-hold discretization and origin-centered ellipsoid geometry.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <vector>

#include "pshield/errors.hpp"

namespace pshield {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::Index;

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

/// e^M by scaling and squaring around the degree-13 Pade approximant
/// (scaling threshold ||M||_1 <= 5.37).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime,
              Derived::ColsAtCompileTime>
expm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Result = Eigen::Matrix<Scalar, Derived::RowsAtCompileTime,
                               Derived::ColsAtCompileTime>;
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << "expm: matrix must be square, got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0,
                                 7771770303897600.0,  1187353796428800.0,
                                 129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,
                                 1323241920.0,        40840800.0,
                                 960960.0,            16380.0,
                                 182.0,               1.0};
  const Index n = m.rows();
  if (n == 0) return Result(m);
  if (!m.allFinite()) throw ParameterError("expm: non-finite entry");

  const Scalar norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > Scalar(5.37)) {
    s = static_cast<int>(std::ceil(std::log2(norm1 / Scalar(5.37))));
  }
  const Result as = m / std::pow(Scalar(2), s);
  const Result id = Result::Identity(n, n);
  const Result a2 = as * as;
  const Result a4 = a2 * a2;
  const Result a6 = a4 * a2;

  Result u = a6 * (Scalar(b[13]) * a6 + Scalar(b[11]) * a4 + Scalar(b[9]) * a2);
  u += Scalar(b[7]) * a6 + Scalar(b[5]) * a4 + Scalar(b[3]) * a2 + Scalar(b[1]) * id;
  u = as * u;
  Result v = a6 * (Scalar(b[12]) * a6 + Scalar(b[10]) * a4 + Scalar(b[8]) * a2);
  v += Scalar(b[6]) * a6 + Scalar(b[4]) * a4 + Scalar(b[2]) * a2 + Scalar(b[0]) * id;

  Result r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

// ---------------------------------------------------------------------------
// Exact discretization
// ---------------------------------------------------------------------------

template <typename Scalar>
struct Discretization {
  MatX<Scalar> A;
  std::vector<MatX<Scalar>> B;
};

/// Zero-order-hold discretization of dx/dt = Ac x + sum_i Bc_i u_i.
/// The input integral int_0^Ts e^{Ac s} ds is read off the augmented
/// exponential exp([[Ac, I], [0, 0]] Ts).
template <typename DerivedA, typename Scalar = typename DerivedA::Scalar>
Discretization<Scalar> discretize(const Eigen::MatrixBase<DerivedA>& ac,
                                  std::span<const MatX<Scalar>> bc, Scalar ts) {
  const Index n = ac.rows();
  if (ac.cols() != n) throw DimensionError("discretize: Ac must be square");
  if (!(ts > Scalar(0))) throw ParameterError("discretize: Ts must be positive");
  for (const auto& b : bc) {
    if (b.rows() != n) throw DimensionError("discretize: input matrix row mismatch");
  }
  MatX<Scalar> aug = MatX<Scalar>::Zero(2 * n, 2 * n);
  aug.topLeftCorner(n, n) = ac * ts;
  aug.topRightCorner(n, n) = MatX<Scalar>::Identity(n, n) * ts;
  const MatX<Scalar> e = expm(aug);

  Discretization<Scalar> out;
  out.A = e.topLeftCorner(n, n);
  const MatX<Scalar> integral = e.topRightCorner(n, n);
  out.B.reserve(bc.size());
  for (const auto& b : bc) out.B.push_back(integral * b);
  return out;
}

template <typename DerivedA, typename Scalar = typename DerivedA::Scalar>
Discretization<Scalar> discretize(const Eigen::MatrixBase<DerivedA>& ac,
                                  const std::vector<MatX<Scalar>>& bc, Scalar ts) {
  return discretize(ac, std::span<const MatX<Scalar>>(bc), ts);
}

// ---------------------------------------------------------------------------
// Ellipsoids and half-spaces
// ---------------------------------------------------------------------------

/// Origin-centered set {z : z' P z <= alpha} with P symmetric positive definite.
template <typename Scalar>
class Ellipsoid {
 public:
  Ellipsoid(const MatX<Scalar>& shape, Scalar alpha)
      : shape_((shape + shape.transpose()) / Scalar(2)), alpha_(alpha) {
    if (shape.rows() != shape.cols() || shape.rows() == 0) {
      throw DimensionError("Ellipsoid: shape matrix must be square and nonempty");
    }
    if (!shape.allFinite()) throw ParameterError("Ellipsoid: non-finite shape");
    const Scalar asym = (shape - shape.transpose()).norm();
    if (asym > Scalar(1e-10) * std::max(Scalar(1), shape.norm())) {
      throw ParameterError("Ellipsoid: shape matrix is not symmetric");
    }
    if (!(alpha > Scalar(0))) throw ParameterError("Ellipsoid: alpha must be positive");
    Eigen::SelfAdjointEigenSolver<MatX<Scalar>> eig(shape_, Eigen::EigenvaluesOnly);
    const Scalar lo = eig.eigenvalues().minCoeff();
    const Scalar hi = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (!(lo > Scalar(1e-15) * hi) || !(lo > Scalar(0))) {
      std::ostringstream os;
      os << "Ellipsoid: shape matrix is not positive definite (min eigenvalue " << lo << ")";
      throw ParameterError(os.str());
    }
  }

  const MatX<Scalar>& shape() const { return shape_; }
  Scalar alpha() const { return alpha_; }
  Index dim() const { return shape_.rows(); }

  /// z' P z, to be compared with alpha().
  template <typename Derived>
  Scalar level(const Eigen::MatrixBase<Derived>& z) const {
    return z.dot(shape_ * z);
  }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& z, Scalar slack = Scalar(0)) const {
    return level(z) <= alpha_ + slack;
  }

  /// Point where the ray through `direction` leaves the ellipsoid.
  template <typename Derived>
  VecX<Scalar> boundary_point(const Eigen::MatrixBase<Derived>& direction) const {
    return direction * std::sqrt(alpha_ / level(direction));
  }

 private:
  MatX<Scalar> shape_;
  Scalar alpha_;
};

/// Open half-space {x : c' x > b}.
template <typename Scalar>
struct HalfSpace {
  HalfSpace(VecX<Scalar> normal, Scalar offset) : c(std::move(normal)), b(offset) {
    if (c.size() == 0 || c.squaredNorm() == Scalar(0)) {
      throw ParameterError("HalfSpace: normal must be nonzero");
    }
  }
  VecX<Scalar> c;
  Scalar b;
};

/// Shadow of `e` on the coordinates `keep`: shape Q1 - Q2 Q3^{-1} Q2', same level.
template <typename Scalar>
Ellipsoid<Scalar> project_ellipsoid(const Ellipsoid<Scalar>& e, std::span<const Index> keep) {
  const Index n = e.dim();
  std::vector<bool> kept(static_cast<std::size_t>(n), false);
  for (Index k : keep) {
    if (k < 0 || k >= n || kept[static_cast<std::size_t>(k)]) {
      throw DimensionError("project_ellipsoid: invalid or repeated index");
    }
    kept[static_cast<std::size_t>(k)] = true;
  }
  std::vector<Index> drop;
  for (Index k = 0; k < n; ++k) {
    if (!kept[static_cast<std::size_t>(k)]) drop.push_back(k);
  }
  if (keep.empty()) throw DimensionError("project_ellipsoid: nothing to keep");

  const MatX<Scalar>& p = e.shape();
  const auto nk = static_cast<Index>(keep.size());
  const auto nd = static_cast<Index>(drop.size());
  MatX<Scalar> q1(nk, nk), q2(nk, nd), q3(nd, nd);
  for (Index i = 0; i < nk; ++i) {
    for (Index j = 0; j < nk; ++j) q1(i, j) = p(keep[i], keep[j]);
    for (Index j = 0; j < nd; ++j) q2(i, j) = p(keep[i], drop[j]);
  }
  for (Index i = 0; i < nd; ++i) {
    for (Index j = 0; j < nd; ++j) q3(i, j) = p(drop[i], drop[j]);
  }
  if (nd == 0) return Ellipsoid<Scalar>(q1, e.alpha());

  Eigen::SelfAdjointEigenSolver<MatX<Scalar>> eig(q3, Eigen::EigenvaluesOnly);
  const Scalar lo = eig.eigenvalues().minCoeff();
  const Scalar hi = eig.eigenvalues().cwiseAbs().maxCoeff();
  const Scalar cond = lo > Scalar(0) ? hi / lo : std::numeric_limits<Scalar>::infinity();
  if (!(lo > Scalar(0)) || cond > Scalar(1e14)) {
    std::ostringstream os;
    os << "project_ellipsoid: dropped block is singular (condition estimate " << cond << ")";
    throw SingularityError(os.str(), static_cast<double>(cond));
  }
  const MatX<Scalar> schur = q1 - q2 * q3.ldlt().solve(q2.transpose());
  return Ellipsoid<Scalar>((schur + schur.transpose()) / Scalar(2), e.alpha());
}

template <typename Scalar>
Ellipsoid<Scalar> project_ellipsoid(const Ellipsoid<Scalar>& e,
                                    std::initializer_list<Index> keep) {
  const std::vector<Index> k(keep);
  return project_ellipsoid(e, std::span<const Index>(k));
}

/// Distance expression (|b| - sqrt(c' P^{-1} c / alpha)) / (c' c), evaluated as
/// written; not the Euclidean gap (see distance_to_halfspace_oracle).
template <typename Scalar>
Scalar distance_to_halfspace_scaled(const Ellipsoid<Scalar>& e, const HalfSpace<Scalar>& h) {
  if (h.c.size() != e.dim()) throw DimensionError("distance: dimension mismatch");
  const Scalar quad = h.c.dot(e.shape().ldlt().solve(h.c));
  return (std::abs(h.b) - std::sqrt(quad / e.alpha())) / h.c.squaredNorm();
}

/// Signed Euclidean gap between the ellipsoid and the hyperplane c' y = b,
/// measured from the support point x* = sqrt(alpha) P^{-1} c / sqrt(c' P^{-1} c).
/// Nonpositive when the ellipsoid reaches the half-space {c' x > b}.
template <typename Scalar>
Scalar distance_to_halfspace_oracle(const Ellipsoid<Scalar>& e, const HalfSpace<Scalar>& h) {
  if (h.c.size() != e.dim()) throw DimensionError("distance: dimension mismatch");
  const VecX<Scalar> pinv_c = e.shape().llt().solve(h.c);
  const VecX<Scalar> support = std::sqrt(e.alpha()) * pinv_c / std::sqrt(h.c.dot(pinv_c));
  return (h.b - h.c.dot(support)) / h.c.norm();
}

// ---------------------------------------------------------------------------
// Monte-Carlo reachability
// ---------------------------------------------------------------------------

/// Forward samples of z+ = A z + sum_i B_i w_i from the origin with every w_i
/// drawn on or inside {w' W_i w <= 1}. Returns the origin followed by every
/// visited state (n_runs * horizon of them): an inner approximation of the
/// reachable sets up to `horizon`.
std::vector<Eigen::VectorXd> mc_reach_sample(const Eigen::MatrixXd& a,
                                             const std::vector<Eigen::MatrixXd>& b,
                                             const std::vector<Eigen::MatrixXd>& w,
                                             int horizon, int n_runs, std::uint64_t seed);

}  // namespace pshield
