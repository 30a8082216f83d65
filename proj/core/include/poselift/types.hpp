#pragma once

#include <Eigen/Core>

namespace poselift {

/// One joint per column. Column-major storage means `joints.data()` is the
/// flattened joint-major vector (x0, y0, z0, x1, ...).
using Points3 = Eigen::Matrix3Xd;
using Points2 = Eigen::Matrix2Xd;

/// Raw 3D pose in millimeters, arbitrary orientation and placement.
struct Pose3D {
  Points3 joints;

  Eigen::Index joint_count() const { return joints.cols(); }
};

/// 3D pose with the root at the origin and the heading (yaw) removed.
struct NormalizedPose3D {
  Points3 joints;

  Eigen::Index joint_count() const { return joints.cols(); }
  Eigen::Map<const Eigen::VectorXd> flat() const {
    return {joints.data(), joints.size()};
  }
};

/// Image-plane pose: pixels for observations, unitless for virtual views.
struct Pose2D {
  Points2 joints;

  Eigen::Index joint_count() const { return joints.cols(); }
};

/// 2D retrieval descriptor: y spans [-1, 1], x centered at zero.
struct NormalizedPose2D {
  Points2 joints;

  Eigen::Index joint_count() const { return joints.cols(); }
  Eigen::Map<const Eigen::VectorXd> flat() const {
    return {joints.data(), joints.size()};
  }
};

}  // namespace poselift
