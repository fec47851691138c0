#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pshield/errors.hpp"
#include "pshield/lti.hpp"
#include "pshield/sampling.hpp"

using namespace pshield;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd taylor_exp(const MatrixXd& m, int terms = 60) {
  MatrixXd sum = MatrixXd::Identity(m.rows(), m.cols());
  MatrixXd term = sum;
  for (int k = 1; k < terms; ++k) {
    term = term * m / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = g(rng);
  return a * a.transpose() + 0.5 * MatrixXd::Identity(n, n);
}

}  // namespace

TEST(Expm, ZeroIsIdentity) {
  EXPECT_TRUE(expm(MatrixXd::Zero(5, 5)).isApprox(MatrixXd::Identity(5, 5), 1e-15));
}

TEST(Expm, Nilpotent) {
  Eigen::Matrix2d n;
  n << 0, 1, 0, 0;
  Eigen::Matrix2d want;
  want << 1, 1, 0, 1;
  EXPECT_LT((expm(n) - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Expm, MatchesTaylorSeries) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd m(5, 5);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
    m /= m.lpNorm<1>() > 1.0 ? m.lpNorm<1>() : 1.0;
    const MatrixXd ref = taylor_exp(m);
    EXPECT_LT((expm(m) - ref).norm() / ref.norm(), 1e-12);
  }
}

TEST(Expm, LargeNormUsesSquaring) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatrixXd m(4, 4);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
  m *= 10.0 / m.lpNorm<1>();
  // e^M = (e^{M/16})^16 with the small factor from the series
  MatrixXd ref = taylor_exp(m / 16.0);
  for (int i = 0; i < 4; ++i) ref = ref * ref;
  EXPECT_LT((expm(m) - ref).norm() / ref.norm(), 1e-12);
}

TEST(Expm, GroupProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    MatrixXd m(5, 5);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
    m *= 5.0 / m.norm();
    const MatrixXd prod = expm(m) * expm(-m);
    EXPECT_LT((prod - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Expm, RejectsNonSquare) {
  EXPECT_THROW(expm(MatrixXd::Zero(2, 3)), DimensionError);
}

TEST(Discretize, ScalarClosedForm) {
  const MatrixXd ac = MatrixXd::Constant(1, 1, -1.0);
  const std::vector<MatrixXd> bc{MatrixXd::Ones(1, 1)};
  const auto d = discretize(ac, bc, 0.1);
  EXPECT_NEAR(d.A(0, 0), std::exp(-0.1), 1e-15);
  EXPECT_NEAR(d.B[0](0, 0), 1.0 - std::exp(-0.1), 1e-15);
}

TEST(Discretize, ZeroDynamics) {
  MatrixXd bc(3, 2);
  bc << 1, 2, 3, 4, 5, 6;
  const std::vector<MatrixXd> bl{bc};
  const auto d = discretize(MatrixXd::Zero(3, 3), bl, 0.25);
  EXPECT_TRUE(d.A.isApprox(MatrixXd::Identity(3, 3)));
  EXPECT_LT((d.B[0] - 0.25 * bc).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Discretize, InputFilterChannel) {
  const double h = 0.5, ts = 0.1;
  const MatrixXd ac = MatrixXd::Constant(1, 1, -1.0 / h);
  const std::vector<MatrixXd> bc{MatrixXd::Constant(1, 1, 1.0 / h)};
  const auto d = discretize(ac, bc, ts);
  EXPECT_NEAR(d.A(0, 0), std::exp(-0.2), 1e-14);
  EXPECT_NEAR(d.B[0](0, 0), 1.0 - std::exp(-0.2), 1e-14);
}

TEST(Discretize, SmallStepConsistency) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatrixXd ac(4, 4), bc(4, 1);
  for (Eigen::Index i = 0; i < ac.size(); ++i) ac(i) = u(rng);
  for (Eigen::Index i = 0; i < bc.size(); ++i) bc(i) = u(rng);
  const std::vector<MatrixXd> bl{bc};
  double prev_a = 0.0, prev_b = 0.0;
  for (double ts : {1e-2, 1e-3}) {
    const auto d = discretize(ac, bl, ts);
    const double ea = ((d.A - MatrixXd::Identity(4, 4)) / ts - ac).norm();
    const double eb = (d.B[0] / ts - bc).norm();
    EXPECT_LT(ea, 10.0 * ts);
    EXPECT_LT(eb, 10.0 * ts);
    if (prev_a > 0.0) {
      // first-order convergence: error shrinks roughly tenfold
      EXPECT_NEAR(prev_a / ea, 10.0, 1.0);
      EXPECT_NEAR(prev_b / eb, 10.0, 1.0);
    }
    prev_a = ea;
    prev_b = eb;
  }
}

TEST(Ellipsoid, ValidatesInputs) {
  EXPECT_THROW(Ellipsoid<double>(MatrixXd::Identity(2, 2), 0.0), ParameterError);
  MatrixXd asym(2, 2);
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW(Ellipsoid<double>(asym, 1.0), ParameterError);
  MatrixXd indef(2, 2);
  indef << 1, 0, 0, -1;
  EXPECT_THROW(Ellipsoid<double>(indef, 1.0), ParameterError);
  EXPECT_THROW(Ellipsoid<double>(MatrixXd::Identity(2, 3), 1.0), DimensionError);
}

TEST(Projection, BlockDiagonal) {
  MatrixXd p = MatrixXd::Zero(3, 3);
  p.topLeftCorner(2, 2) << 2, 0.3, 0.3, 1;
  p(2, 2) = 5;
  const auto proj = project_ellipsoid(Ellipsoid<double>(p, 2.0), {0, 1});
  EXPECT_TRUE(proj.shape().isApprox(p.topLeftCorner(2, 2)));
  EXPECT_DOUBLE_EQ(proj.alpha(), 2.0);
}

TEST(Projection, IdentityToFirstAxis) {
  const auto proj = project_ellipsoid(Ellipsoid<double>(MatrixXd::Identity(2, 2), 1.0), {0});
  ASSERT_EQ(proj.dim(), 1);
  EXPECT_DOUBLE_EQ(proj.shape()(0, 0), 1.0);
}

TEST(Projection, ShadowContainedBySampling) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const Ellipsoid<double> e(random_spd(3, rng), 1.7);
    const auto proj = project_ellipsoid(e, {0, 1});
    for (int s = 0; s < 10000; ++s) {
      const VectorXd z = e.boundary_point(sample_unit_sphere(3, rng));
      EXPECT_LE(proj.level(z.head(2)), proj.alpha() + 1e-9);
    }
  }
}

TEST(Projection, ShadowIsTight) {
  // the projected boundary is attained: maximize c'x over E equals max over shadow
  std::mt19937_64 rng(4);
  const Ellipsoid<double> e(random_spd(4, rng), 0.8);
  const std::vector<Eigen::Index> keep{1, 3};
  const auto proj = project_ellipsoid(e, std::span<const Eigen::Index>(keep));
  const Eigen::Vector2d c(0.3, -1.2);
  VectorXd cf = VectorXd::Zero(4);
  cf(1) = c(0);
  cf(3) = c(1);
  const double full = std::sqrt(e.alpha() * cf.dot(e.shape().llt().solve(cf)));
  const double shadow = std::sqrt(proj.alpha() * c.dot(proj.shape().llt().solve(c)));
  EXPECT_NEAR(full, shadow, 1e-12);
}

TEST(Projection, SingularDroppedBlock) {
  MatrixXd p = MatrixXd::Identity(2, 2);
  p(1, 1) = 1e-16;
  // constructor rejects this as non-SPD before projection is reached
  EXPECT_THROW(project_ellipsoid(Ellipsoid<double>(p, 1.0), {0}), ParameterError);
}

TEST(Distance, ScaledFormula) {
  const Ellipsoid<double> unit(MatrixXd::Identity(2, 2), 1.0);
  const HalfSpace<double> plane(Eigen::Vector2d(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(distance_to_halfspace_scaled(unit, plane), 1.0);
  const Ellipsoid<double> big(MatrixXd::Identity(2, 2), 4.0);
  EXPECT_DOUBLE_EQ(distance_to_halfspace_scaled(big, plane), 1.5);
}

TEST(Distance, Oracle) {
  const Ellipsoid<double> unit(MatrixXd::Identity(2, 2), 1.0);
  EXPECT_NEAR(distance_to_halfspace_oracle(unit, HalfSpace<double>(Eigen::Vector2d(1, 0), 2.0)),
              1.0, 1e-15);
  EXPECT_NEAR(distance_to_halfspace_oracle(unit, HalfSpace<double>(Eigen::Vector2d(1, 0), 0.5)),
              -0.5, 1e-15);
  const Ellipsoid<double> e(Eigen::Vector2d(1, 4).asDiagonal().toDenseMatrix(), 1.0);
  EXPECT_NEAR(distance_to_halfspace_oracle(e, HalfSpace<double>(Eigen::Vector2d(0, 1), 1.0)),
              0.5, 1e-15);
}

TEST(Distance, OracleMatchesSupportFunction) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd p = random_spd(4, rng);
    const double alpha = 0.1 + std::abs(g(rng));
    VectorXd c(4);
    for (int i = 0; i < 4; ++i) c(i) = g(rng);
    const double b = 3.0 * g(rng);
    const Ellipsoid<double> e(p, alpha);
    const double want = (b - std::sqrt(alpha * c.dot(p.inverse() * c))) / c.norm();
    EXPECT_NEAR(distance_to_halfspace_oracle(e, HalfSpace<double>(c, b)), want, 1e-10);
  }
}

TEST(Distance, OracleAgainstSampledMinimum) {
  // min over boundary samples of (b - c'x)/|c| approaches the oracle from above
  std::mt19937_64 rng(12);
  const Ellipsoid<double> e(random_spd(3, rng), 0.6);
  const Eigen::Vector3d c(1.0, -0.5, 0.25);
  const HalfSpace<double> hs(c, 4.0);
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 200000; ++s) {
    const VectorXd x = e.boundary_point(sample_unit_sphere(3, rng));
    best = std::min(best, (hs.b - c.dot(x)) / c.norm());
  }
  const double d = distance_to_halfspace_oracle(e, hs);
  EXPECT_GE(best, d - 1e-12);
  EXPECT_LT(best - d, 1e-3);
}

TEST(HalfSpace, RejectsZeroNormal) {
  EXPECT_THROW(HalfSpace<double>(VectorXd::Zero(3), 1.0), ParameterError);
}

TEST(McReach, EmptyInputsGiveOrigin) {
  const auto s = mc_reach_sample(MatrixXd::Identity(2, 2), {}, {}, 10, 5, 1);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_TRUE(s[0].isZero());
}

TEST(McReach, ZeroDynamicsStayInUnitBall) {
  const auto s = mc_reach_sample(MatrixXd::Zero(3, 3), {MatrixXd::Identity(3, 3)},
                                 {MatrixXd::Identity(3, 3)}, 5, 200, 2);
  for (const auto& z : s) EXPECT_LE(z.norm(), 1.0 + 1e-12);
}

TEST(McReach, GeometricSeriesBound) {
  const auto s = mc_reach_sample(MatrixXd::Constant(1, 1, 0.5), {MatrixXd::Ones(1, 1)},
                                 {MatrixXd::Ones(1, 1)}, 60, 200, 3);
  double mx = 0.0;
  for (const auto& z : s) mx = std::max(mx, std::abs(z(0)));
  EXPECT_LE(mx, 2.0 + 1e-12);
  EXPECT_GT(mx, 1.5);
}

TEST(McReach, Deterministic) {
  const MatrixXd a = MatrixXd::Constant(2, 2, 0.2);
  const auto s1 = mc_reach_sample(a, {MatrixXd::Identity(2, 2)}, {MatrixXd::Identity(2, 2)}, 5, 3, 42);
  const auto s2 = mc_reach_sample(a, {MatrixXd::Identity(2, 2)}, {MatrixXd::Identity(2, 2)}, 5, 3, 42);
  ASSERT_EQ(s1.size(), s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i) EXPECT_EQ(s1[i], s2[i]);
}

TEST(McReach, UnstableOverflowGuard) {
  EXPECT_THROW(mc_reach_sample(MatrixXd::Constant(1, 1, 3.0), {MatrixXd::Ones(1, 1)},
                               {MatrixXd::Ones(1, 1)}, 100, 1, 1),
               DivergenceError);
}
