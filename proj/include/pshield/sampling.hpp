#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace pshield {

using Rng = std::mt19937_64;

/// Uniform direction on the unit sphere in R^n.
inline Eigen::VectorXd sample_unit_sphere(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  } while (z.squaredNorm() == 0.0);
  return z.normalized();
}

/// Draw from {w : w' W w <= 1}. With probability `boundary_prob` the sample
/// sits on the boundary; otherwise it is uniform in the volume.
class EllipsoidSampler {
 public:
  explicit EllipsoidSampler(const Eigen::MatrixXd& w, double boundary_prob = 0.5)
      : dim_(w.rows()), boundary_prob_(boundary_prob) {
    // w' W w = |U w|^2 with W = U'U, so w = U^{-1} z maps the unit ball.
    const Eigen::MatrixXd sym = 0.5 * (w + w.transpose());
    const Eigen::LLT<Eigen::MatrixXd> llt(sym);
    upper_inv_ = llt.matrixU().solve(Eigen::MatrixXd::Identity(dim_, dim_));
  }

  Eigen::VectorXd operator()(Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd z = sample_unit_sphere(dim_, rng);
    if (unif(rng) >= boundary_prob_) {
      z *= std::pow(unif(rng), 1.0 / static_cast<double>(dim_));
    }
    return upper_inv_ * z;
  }

  Eigen::Index dim() const { return dim_; }

 private:
  Eigen::Index dim_;
  double boundary_prob_;
  Eigen::MatrixXd upper_inv_;
};

}  // namespace pshield
