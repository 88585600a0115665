#pragma once

#include <random>

#include "hiervo/geometry.hpp"
#include "hiervo/synthdata.hpp"

namespace hiervo::testutil {

inline Twist random_twist(std::mt19937_64& rng, double trans, double rot) {
  std::uniform_real_distribution<double> ut(-trans, trans), ur(-rot, rot);
  return Twist(Eigen::Vector3d(ut(rng), ut(rng), ut(rng)),
               Eigen::Vector3d(ur(rng), ur(rng), ur(rng)));
}

/// Rotation angle between two poses, degrees.
inline double rotation_error_deg(const Pose& a, const Pose& b) {
  const Eigen::Matrix3d r = a.rotation().transpose() * b.rotation();
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

/// Relative translation error, percent of the reference magnitude.
inline double translation_error_pct(const Pose& estimate, const Pose& reference) {
  const double ref = reference.translation().norm();
  return 100.0 * (estimate.translation() - reference.translation()).norm() / std::max(ref, 1e-12);
}

}  // namespace hiervo::testutil
