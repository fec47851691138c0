#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pshield/errors.hpp"
#include "pshield/lti.hpp"
#include "pshield/model.hpp"

using namespace pshield;

namespace {

Mat54 baseline_l() {
  Mat54 l;
  l << 0.0245, -0.0001, 0.0001, -0.0994,
      -0.0001, 0.0147, -0.0001, -0.0000,
       0.0000, -0.0001, 0.0012, 0.0000,
      -0.0994, -0.0000, -0.0000, 1.0083,
      -0.0105, -0.0000, 0.0001, 0.1053;
  return l;
}

}  // namespace

TEST(Continuous, DefaultParameters) {
  const auto c = build_continuous(VehicleParams{});
  EXPECT_DOUBLE_EQ(c.Ac(0, 2), -0.5);
  EXPECT_DOUBLE_EQ(c.Ac(2, 2), -10.0);
  EXPECT_DOUBLE_EQ(c.Ac(4, 4), -10.0);
  EXPECT_TRUE(c.Ac.leftCols<2>().isZero(0.0));
  EXPECT_EQ(c.C.row(1), (Eigen::RowVectorXd(5) << 0, 0, -0.5, 1, 0).finished());
}

TEST(Continuous, UnitParameters) {
  VehicleParams p;
  p.h = 1.0;
  p.tau = 1.0;
  const auto c = build_continuous(p);
  EXPECT_DOUBLE_EQ(c.Ac(0, 2), -1.0);
  EXPECT_EQ(c.Bc1, (Vec5() << 0, 0, 1, 0, 0).finished());
  EXPECT_EQ(c.Bc2, (Vec5() << 0, 0, 0, 0, 1).finished());
}

TEST(Continuous, SparsityPattern) {
  const auto c = build_continuous(VehicleParams{});
  Mat5 pattern;
  pattern << 0, 0, 1, 1, 0,
             0, 0, 1, 0, 0,
             0, 0, 1, 0, 0,
             0, 0, 1, 0, 1,
             0, 0, 0, 0, 1;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) EXPECT_EQ(c.Ac(i, j) != 0.0, pattern(i, j) != 0.0) << i << j;
  }
}

TEST(Params, Validation) {
  VehicleParams p;
  p.h = 0.0;
  EXPECT_THROW(build_continuous(p), ParameterError);
  p = VehicleParams{};
  p.ts = -1.0;
  EXPECT_THROW(p.validate(), ParameterError);
  NoiseBounds nb;
  nb.w3_bar = 0.0;
  EXPECT_THROW(nb.validate(), ParameterError);
}

TEST(Discrete, InputFilterClosedForms) {
  const auto d = build_plant(VehicleParams{});
  EXPECT_NEAR(d.au, 0.818730753077982, 1e-12);
  for (double h : {0.3, 0.5, 1.2}) {
    for (double ts : {0.01, 0.1, 0.4}) {
      VehicleParams p;
      p.h = h;
      p.ts = ts;
      const auto q = build_plant(p);
      EXPECT_NEAR(q.au, std::exp(-ts / h), 1e-12);
      EXPECT_NEAR(q.bu, 1.0 - q.au, 1e-12);
    }
  }
}

TEST(Discrete, ExactDiscretization) {
  const VehicleParams p;
  const auto c = build_continuous(p);
  const auto d = build_plant(p);
  EXPECT_LT((d.A - expm(c.Ac * p.ts)).cwiseAbs().maxCoeff(), 1e-14);
  // velocity and acceleration rows from the driveline lag
  EXPECT_NEAR(d.A(2, 2), std::exp(-p.ts / p.tau), 1e-14);
  EXPECT_NEAR(d.B1(2), 1.0 - std::exp(-p.ts / p.tau), 1e-14);
}

TEST(Discrete, SmallStepFirstOrder) {
  VehicleParams p;
  p.ts = 1e-3;
  const auto c = build_continuous(p);
  const auto d = build_plant(p);
  EXPECT_LT((d.A - (Mat5::Identity() + c.Ac * p.ts)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Discrete, MeasurementStructure) {
  const auto d = build_plant(VehicleParams{});
  Mat24 pinv;
  pinv << 1, 0, 0, 0, 0, 0, 0, 1;
  EXPECT_EQ(d.GammaPinv, pinv);
  EXPECT_TRUE((d.GammaPinv * d.Gamma).isIdentity(0.0));
  EXPECT_EQ(d.clean_projector(), Eigen::Vector4d(0, 1, 1, 0).asDiagonal().toDenseMatrix());
  EXPECT_TRUE((d.Ce.leftCols<4>().isIdentity(0.0)));
  EXPECT_TRUE(d.Ce.col(4).isZero(0.0));
}

TEST(Discrete, Observable) {
  for (double h : {0.2, 0.5, 2.0}) {
    for (double tau : {0.05, 0.1, 0.5}) {
      VehicleParams p;
      p.h = h;
      p.tau = tau;
      EXPECT_EQ(observability_rank(build_plant(p)), 5);
    }
  }
}

TEST(ClosedLoop, ZeroGain) {
  const auto d = build_plant(VehicleParams{});
  const auto cl = build_closed_loop(d, Gain(0, 0));
  EXPECT_TRUE((cl.A.bottomLeftCorner<1, 5>().isZero(0.0)));
  EXPECT_TRUE(cl.B2.bottomRows<1>().isZero(0.0));
  EXPECT_TRUE(cl.B4.isZero(0.0));
  EXPECT_TRUE(cl.B5.isZero(0.0));
  EXPECT_TRUE(cl.B6.isZero(0.0));
  EXPECT_DOUBLE_EQ(cl.B1(5), d.bu);
  EXPECT_DOUBLE_EQ(cl.B3(5), d.bu);
}

TEST(ClosedLoop, BaselineGainEntries) {
  const auto d = build_plant(VehicleParams{});
  const auto cl = build_closed_loop(d, Gain(0.2, 0.7));
  EXPECT_NEAR(cl.A(5, 0), d.bu * 0.2, 1e-15);
  EXPECT_EQ((cl.A.topLeftCorner<5, 5>()), d.A);
  EXPECT_EQ(cl.B5, -cl.B4);
  EXPECT_EQ(cl.stacked().cols(), 17);
}

TEST(ClosedLoop, StructureForRandomGains) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const auto d = build_plant(VehicleParams{});
  for (int i = 0; i < 10; ++i) {
    const Gain k(u(rng), u(rng));
    const auto cl = build_closed_loop(d, k);
    EXPECT_EQ(cl.B5, -cl.B4);
    EXPECT_EQ((cl.A.topLeftCorner<5, 5>()), d.A);
    EXPECT_TRUE(cl.B4.topRows<5>().isZero(0.0));
    EXPECT_LT((cl.B6.bottomRows<1>() + d.bu * k * d.GammaPinv * d.Ce).norm(), 1e-15);
  }
}

TEST(ErrorDyn, ZeroGain) {
  const auto d = build_plant(VehicleParams{});
  const auto ed = build_error_dynamics(d, Mat54::Zero());
  EXPECT_EQ(ed.A, d.A);
  EXPECT_TRUE(ed.B_we.isZero(0.0));
  EXPECT_TRUE(ed.B_r.isZero(0.0));
  EXPECT_EQ(ed.B_wu, -d.B2);
}

TEST(ErrorDyn, UnitModesUnderAttackProjection) {
  const auto d = build_plant(VehicleParams{});
  const auto ed = build_error_dynamics(d, baseline_l());
  Eigen::EigenSolver<Mat5> es(ed.A);
  int unit = 0;
  for (int i = 0; i < 5; ++i) unit += std::abs(std::abs(es.eigenvalues()(i)) - 1.0) < 1e-9;
  EXPECT_EQ(unit, 2);
}

TEST(RecoverDelta, Cases) {
  const auto d = build_plant(VehicleParams{});
  const Vec5 e = (Vec5() << 0.1, -0.2, 0.3, 0.4, 0.5).finished();
  const Eigen::Vector4d w(0.01, 0.02, -0.03, 0.04);
  EXPECT_TRUE(recover_delta(d.Ce * e + w, e, w, d).isZero(1e-15));
  EXPECT_EQ(recover_delta(Eigen::Vector4d(1, 0, 0, 2), Vec5::Zero(), Eigen::Vector4d::Zero(), d),
            Eigen::Vector2d(1, 2));
}

TEST(RecoverDelta, RoundTrip) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  const auto d = build_plant(VehicleParams{});
  for (int i = 0; i < 100; ++i) {
    Vec5 e;
    Eigen::Vector4d w;
    Eigen::Vector2d delta;
    for (int k = 0; k < 5; ++k) e(k) = g(rng);
    for (int k = 0; k < 4; ++k) w(k) = g(rng);
    for (int k = 0; k < 2; ++k) delta(k) = g(rng);
    const Eigen::Vector4d r = d.Ce * e + w + d.Gamma * delta;
    EXPECT_LT((recover_delta(r, e, w, d) - delta).norm(), 1e-12);
  }
}

TEST(ErrorDyn, AttackFreeCollapse) {
  // residual form of the error dynamics equals the direct form when delta = 0
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  const auto d = build_plant(VehicleParams{});
  const Mat54 l = baseline_l();
  const auto ed = build_error_dynamics(d, l);
  Vec5 e1 = (Vec5() << 1, -0.5, 0.2, 0.3, -0.1).finished();
  Vec5 e2 = e1;
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double wu = u(rng);
    const Eigen::Vector4d we(u(rng), u(rng), u(rng), u(rng));
    const Eigen::Vector4d r = d.Ce * e2 + we;
    e1 = (d.A - l * d.Ce) * e1 - d.B2 * wu - l * we;
    e2 = ed.A * e2 + ed.B_wu * wu + ed.B_we * we + ed.B_r * r;
    worst = std::max(worst, (e1 - e2).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-12);
}
