#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "poselift/normalize.hpp"
#include "poselift/skeleton.hpp"
#include "poselift/synth.hpp"
#include "poselift/types.hpp"

namespace poselift::test {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Points3 random_points(Eigen::Index joints, std::mt19937_64& rng, double half_range = 500.0) {
  Points3 p(3, joints);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = uniform(rng, -half_range, half_range);
  return p;
}

inline Points2 random_points_2d(Eigen::Index joints, std::mt19937_64& rng, double half_range = 1.0) {
  Points2 p(2, joints);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = uniform(rng, -half_range, half_range);
  return p;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  Eigen::Vector4d q;
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 4; ++i) q(i) = n(rng);
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).normalized().toRotationMatrix();
}

inline Eigen::Matrix3d yaw(double radians) {
  return Eigen::AngleAxisd(radians, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

/// Articulated pose on `skeleton` from the default body model.
inline Pose3D body_pose(std::mt19937_64& rng,
                        const SkeletonSpec& skeleton = SkeletonSpec::h36m14()) {
  static const auto model = default_body_model();
  return generate_pose(model, skeleton, 10.0, rng);
}

inline NormalizedPose3D normalized_body_pose(std::mt19937_64& rng,
                                             const SkeletonSpec& skeleton = SkeletonSpec::h36m14()) {
  return normalize_pose_3d(body_pose(rng, skeleton), skeleton);
}

}  // namespace poselift::test
