#include "poselift/normalize.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "poselift/error.hpp"

namespace poselift {

namespace {

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

NormalizedPose3D normalize_pose_3d(const Pose3D& pose, std::size_t root, std::size_t left_hip,
                                   std::size_t right_hip) {
  const auto joints = static_cast<std::size_t>(pose.joint_count());
  if (root >= joints || left_hip >= joints || right_hip >= joints) {
    throw Error(ErrorCode::kJointCountMismatch, "normalize_pose_3d: joint index out of range");
  }
  if (left_hip == right_hip) {
    throw Error(ErrorCode::kInvalidArgument, "normalize_pose_3d: hips must be distinct joints");
  }
  if (!pose.joints.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "normalize_pose_3d: non-finite coordinates");
  }
  const Eigen::Vector3d hips =
      pose.joints.col(static_cast<Eigen::Index>(right_hip)) -
      pose.joints.col(static_cast<Eigen::Index>(left_hip));
  const double span = std::hypot(hips.x(), hips.y());
  if (span <= kMinHipSpanMm) {
    throw Error(ErrorCode::kDegenerateHips,
                "normalize_pose_3d: hip line is (nearly) vertical, heading undefined");
  }
  const double c = hips.x() / span;
  const double s = hips.y() / span;
  // Rotation by -heading about z.
  Eigen::Matrix3d yaw;
  yaw << c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0;

  NormalizedPose3D out;
  out.joints = yaw * (pose.joints.colwise() - pose.joints.col(static_cast<Eigen::Index>(root)));
  return out;
}

NormalizedPose3D normalize_pose_3d(const Pose3D& pose, const SkeletonSpec& skeleton) {
  if (static_cast<std::size_t>(pose.joint_count()) != skeleton.joint_count()) {
    throw Error(ErrorCode::kJointCountMismatch,
                "normalize_pose_3d: pose has " + std::to_string(pose.joint_count()) +
                    " joints, skeleton '" + skeleton.name() + "' has " +
                    std::to_string(skeleton.joint_count()));
  }
  return normalize_pose_3d(pose, skeleton.root_index(), skeleton.left_hip(),
                           skeleton.right_hip());
}

std::vector<VirtualCamera> default_camera_rig() {
  std::vector<VirtualCamera> rig;
  rig.reserve(kRigAzimuths * kRigElevations);
  for (int e = 0; e < kRigElevations; ++e) {
    for (int a = 0; a < kRigAzimuths; ++a) {
      rig.push_back({a * kRigStepDeg, e * kRigStepDeg});
    }
  }
  return rig;
}

Eigen::Matrix3d camera_rotation(const VirtualCamera& cam) {
  Eigen::Matrix3d axes;
  axes << 1.0, 0.0, 0.0,  //
      0.0, 0.0, -1.0,     //
      0.0, 1.0, 0.0;
  const Eigen::Matrix3d az =
      Eigen::AngleAxisd(deg2rad(cam.azimuth_deg), Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Matrix3d el =
      Eigen::AngleAxisd(deg2rad(cam.elevation_deg), Eigen::Vector3d::UnitX()).toRotationMatrix();
  return axes * el * az;
}

Pose2D project_orthographic(const NormalizedPose3D& pose, const VirtualCamera& cam) {
  const Eigen::Matrix3d r = camera_rotation(cam);
  return Pose2D{r.topRows<2>() * pose.joints};
}

NormalizedPose2D normalize_pose_2d(const Pose2D& pose) {
  if (pose.joint_count() == 0 || !pose.joints.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "normalize_pose_2d: empty or non-finite pose");
  }
  const double y_min = pose.joints.row(1).minCoeff();
  const double y_max = pose.joints.row(1).maxCoeff();
  const double extent = y_max - y_min;
  if (!(extent > kMinVerticalExtent)) {
    throw Error(ErrorCode::kDegenerateExtent,
                "normalize_pose_2d: all joints lie on one horizontal line");
  }
  const Eigen::Vector2d center(pose.joints.row(0).mean(), 0.5 * (y_max + y_min));
  const double scale = 2.0 / extent;
  NormalizedPose2D out;
  out.joints = (pose.joints.colwise() - center) * scale;
  return out;
}

double descriptor_distance(const double* a, const double* b, std::size_t joints) {
  double sum = 0.0;
  for (std::size_t j = 0; j < joints; ++j) {
    const double dx = a[2 * j] - b[2 * j];
    const double dy = a[2 * j + 1] - b[2 * j + 1];
    sum += std::sqrt(dx * dx + dy * dy);
  }
  return sum / static_cast<double>(joints);
}

double descriptor_distance(const NormalizedPose2D& a, const NormalizedPose2D& b) {
  if (a.joint_count() != b.joint_count()) {
    throw Error(ErrorCode::kJointCountMismatch, "descriptor_distance: joint counts differ");
  }
  return descriptor_distance(a.joints.data(), b.joints.data(),
                             static_cast<std::size_t>(a.joint_count()));
}

double mean_joint_distance(const Points3& a, const Points3& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::kJointCountMismatch, "mean_joint_distance: joint counts differ");
  }
  return (a - b).colwise().norm().mean();
}

}  // namespace poselift
