#include "pshield/lti.hpp"

#include "pshield/sampling.hpp"

namespace pshield {

std::vector<Eigen::VectorXd> mc_reach_sample(const Eigen::MatrixXd& a,
                                             const std::vector<Eigen::MatrixXd>& b,
                                             const std::vector<Eigen::MatrixXd>& w,
                                             int horizon, int n_runs, std::uint64_t seed) {
  const Index n = a.rows();
  if (a.cols() != n) throw DimensionError("mc_reach_sample: A must be square");
  if (b.size() != w.size()) {
    throw DimensionError("mc_reach_sample: one weight matrix per input channel");
  }
  if (horizon < 0 || n_runs < 0) throw ParameterError("mc_reach_sample: negative count");

  std::vector<EllipsoidSampler> samplers;
  samplers.reserve(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i].rows() != n || w[i].rows() != b[i].cols() || w[i].cols() != b[i].cols()) {
      throw DimensionError("mc_reach_sample: input channel dimension mismatch");
    }
    samplers.emplace_back(w[i]);
  }

  std::vector<Eigen::VectorXd> states;
  states.emplace_back(Eigen::VectorXd::Zero(n));
  if (b.empty()) return states;

  states.reserve(1 + static_cast<std::size_t>(horizon) * static_cast<std::size_t>(n_runs));
  Rng rng(seed);
  for (int run = 0; run < n_runs; ++run) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (int k = 1; k <= horizon; ++k) {
      Eigen::VectorXd next = a * z;
      for (std::size_t i = 0; i < b.size(); ++i) next += b[i] * samplers[i](rng);
      if (!next.allFinite() || next.cwiseAbs().maxCoeff() > 1e12) {
        throw DivergenceError("mc_reach_sample: state overflow, system is not stable", k);
      }
      z = std::move(next);
      states.push_back(z);
    }
  }
  return states;
}

}  // namespace pshield
