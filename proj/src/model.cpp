#include "pshield/model.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "pshield/errors.hpp"
#include "pshield/lti.hpp"

namespace pshield {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream os;
    os << name << " must be positive and finite, got " << value;
    throw ParameterError(os.str());
  }
}

}  // namespace

void VehicleParams::validate() const {
  require_positive(h, "h");
  require_positive(tau, "tau");
  require_positive(ts, "Ts");
  require_positive(standstill, "standstill distance");
  require_positive(v_max, "v_max");
  if (!(length >= 0.0)) throw ParameterError("vehicle length must be nonnegative");
}

void NoiseBounds::validate() const {
  require_positive(u_bar, "u_bar");
  require_positive(w1_bar, "w1_bar");
  require_positive(w2_bar, "w2_bar");
  require_positive(w3_bar, "w3_bar");
}

ContinuousPlant build_continuous(const VehicleParams& params) {
  params.validate();
  const double h = params.h;
  const double inv_tau = 1.0 / params.tau;

  ContinuousPlant p;
  // clang-format off
  p.Ac << 0, 0,       -h, 1,        0,
          0, 0,        1, 0,        0,
          0, 0, -inv_tau, 0,        0,
          0, 0,       -1, 0,        1,
          0, 0,        0, 0, -inv_tau;
  p.C << 1, 0,  0, 0, 0,
         0, 0, -h, 1, 0;
  // clang-format on
  p.Bc1 = Vec5::Zero();
  p.Bc1(kAcceleration) = inv_tau;
  p.Bc2 = Vec5::Zero();
  p.Bc2(kPredecessorAcceleration) = inv_tau;
  return p;
}

DiscretePlant build_discrete(const ContinuousPlant& cont, const VehicleParams& params) {
  params.validate();
  const std::vector<Eigen::MatrixXd> inputs{cont.Bc1, cont.Bc2};
  const auto d = discretize(cont.Ac, inputs, params.ts);

  DiscretePlant p;
  p.A = d.A;
  p.B1 = d.B[0];
  p.B2 = d.B[1];
  // (1/h) int_0^Ts e^{-(Ts-s)/h} ds = 1 - e^{-Ts/h}
  p.au = std::exp(-params.ts / params.h);
  p.bu = -std::expm1(-params.ts / params.h);
  p.C = cont.C;
  p.Ce.setZero();
  p.Ce.leftCols<4>().setIdentity();
  p.Gamma.setZero();
  p.Gamma(0, 0) = 1.0;
  p.Gamma(3, 1) = 1.0;
  // Gamma has orthonormal columns, so Gamma^+ = Gamma'.
  p.GammaPinv = p.Gamma.transpose();
  return p;
}

Eigen::MatrixXd ClosedLoopExtended::stacked() const {
  Eigen::MatrixXd b(6, 17);
  b << B1, B2, B3, B4, B5, B6;
  return b;
}

ClosedLoopExtended build_closed_loop(const DiscretePlant& plant, const Gain& k) {
  if (!k.allFinite()) throw ParameterError("controller gain must be finite");
  ClosedLoopExtended cl;
  cl.A.topLeftCorner<5, 5>() = plant.A;
  cl.A.topRightCorner<5, 1>() = plant.B1;
  cl.A.bottomLeftCorner<1, 5>() = plant.bu * k * plant.C;
  cl.A(5, 5) = plant.au;

  const Eigen::RowVector4d kg = plant.bu * k * plant.GammaPinv;
  cl.B1 << plant.B2, plant.bu;
  cl.B2.setZero();
  cl.B2.bottomRows<1>() = plant.bu * k;
  cl.B3.setZero();
  cl.B3(5) = plant.bu;
  cl.B4.setZero();
  cl.B4.bottomRows<1>() = -kg;
  cl.B5 = -cl.B4;
  cl.B6.setZero();
  cl.B6.bottomRows<1>() = -kg * plant.Ce;
  return cl;
}

ErrorDynamics build_error_dynamics(const DiscretePlant& plant, const Mat54& l) {
  if (!l.allFinite()) throw ParameterError("estimator gain must be finite");
  const Mat54 l_clean = l * plant.clean_projector();
  ErrorDynamics ed;
  ed.A = plant.A - l_clean * plant.Ce;
  ed.B_wu = -plant.B2;
  ed.B_we = -l_clean;
  ed.B_r = -l * plant.attacked_projector();
  return ed;
}

Eigen::Vector2d recover_delta(const Eigen::Vector4d& r, const Vec5& e,
                              const Eigen::Vector4d& w_e, const DiscretePlant& plant) {
  return plant.GammaPinv * (r - plant.Ce * e - w_e);
}

int observability_rank(const DiscretePlant& plant) {
  Eigen::Matrix<double, 20, 5> obs;
  Mat5 power = Mat5::Identity();
  for (int i = 0; i < 5; ++i) {
    obs.middleRows<4>(4 * i) = plant.Ce * power;
    power = power * plant.A;
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 20, 5>> lu(obs);
  lu.setThreshold(1e-10);
  return static_cast<int>(lu.rank());
}

}  // namespace pshield
