#pragma once

// Published design matrices used as test data.

#include "pshield/model.hpp"

namespace fixtures {

// H-infinity estimator gain and its monitor (baseline design)
inline pshield::Mat54 baseline_l() {
  pshield::Mat54 l;
  l << 0.0245, -0.0001, 0.0001, -0.0994,
      -0.0001, 0.0147, -0.0001, -0.0000,
       0.0000, -0.0001, 0.0012, 0.0000,
      -0.0994, -0.0000, -0.0000, 1.0083,
      -0.0105, -0.0000, 0.0001, 0.1053;
  return l;
}

inline Eigen::Matrix4d baseline_pi() {
  Eigen::Matrix4d p;
  p << 0.1863, 0.0001, -0.0002, 0.0173,
       0.0001, 0.1879, 0.0004, 0.0000,
      -0.0002, 0.0004, 0.2239, -0.0000,
       0.0173, 0.0000, -0.0000, 0.0151;
  return p;
}

inline pshield::Gain baseline_k() { return pshield::Gain(0.2, 0.7); }

// reported synthesized design
inline pshield::Mat54 reported_l() {
  pshield::Mat54 l;
  l << 0.2773, -0.0109, -0.0382, 0.0000,
      -0.0000, 0.8754, 0.0118, -0.0000,
      -0.0000, 0.0006, 0.0403, -0.0000,
       0.0000, -0.0265, -0.0961, 0.2772,
      -0.0001, -0.0007, -0.0123, 0.0013;
  return l;
}

inline Eigen::Matrix4d reported_pi() {
  Eigen::Matrix4d p;
  p << 0.0001, 0.0000, -0.0000, 0.0000,
       0.0000, 0.2470, -0.0001, 0.0000,
      -0.0000, -0.0001, 0.2578, -0.0000,
       0.0000, 0.0000, -0.0000, 0.0001;
  return p;
}

inline pshield::Gain reported_k() { return pshield::Gain(0.0051, 0.0204); }

}  // namespace fixtures
