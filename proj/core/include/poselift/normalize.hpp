#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "poselift/skeleton.hpp"
#include "poselift/types.hpp"

namespace poselift {

/// Horizontal hip vectors shorter than this (mm) cannot define a heading.
inline constexpr double kMinHipSpanMm = 1e-6;
/// 2D poses whose y-extent is below this cannot be normalized.
inline constexpr double kMinVerticalExtent = 1e-9;

/// Moves `root` to the origin and rotates about the vertical (z) axis so the
/// horizontal part of the left-hip -> right-hip vector points along +x.
NormalizedPose3D normalize_pose_3d(const Pose3D& pose, std::size_t root, std::size_t left_hip,
                                   std::size_t right_hip);
NormalizedPose3D normalize_pose_3d(const Pose3D& pose, const SkeletonSpec& skeleton);

/// Orthographic viewpoint on the normalized pose space. Angles in degrees.
struct VirtualCamera {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;

  friend bool operator==(const VirtualCamera&, const VirtualCamera&) = default;
};

inline constexpr double kRigStepDeg = 15.0;
inline constexpr int kRigAzimuths = 24;
inline constexpr int kRigElevations = 6;

/// 24 azimuths (0..345) x 6 elevations (0..75), 15 degree steps, azimuth-major
/// order within each elevation row: id = elevation_row * 24 + azimuth_step.
std::vector<VirtualCamera> default_camera_rig();

/// Camera-frame orientation of a viewpoint: x right, y down, z along the
/// viewing direction. Rotates by the azimuth about world z, then by the
/// elevation about the rotated x axis, then maps world (x, y, z) onto camera
/// (x, -z, y).
Eigen::Matrix3d camera_rotation(const VirtualCamera& cam);

/// Drops the depth of `camera_rotation(cam) * joint`. At (0, 0) a joint
/// (x, y, z) lands on (x, -z).
Pose2D project_orthographic(const NormalizedPose3D& pose, const VirtualCamera& cam);

/// Translates x to its centroid and y to its mid-range, then scales uniformly
/// so y spans exactly [-1, 1].
NormalizedPose2D normalize_pose_2d(const Pose2D& pose);

/// Mean per-joint Euclidean distance.
double descriptor_distance(const NormalizedPose2D& a, const NormalizedPose2D& b);

/// Same metric on raw flattened joint-major 2D buffers of `joints` joints.
double descriptor_distance(const double* a, const double* b, std::size_t joints);

/// Mean per-joint Euclidean distance between two 3D poses with equal joint
/// counts (dedup and pairing metric).
double mean_joint_distance(const Points3& a, const Points3& b);

}  // namespace poselift
