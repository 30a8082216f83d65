#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "poselift/index.hpp"
#include "poselift/normalize.hpp"
#include "poselift/types.hpp"

namespace poselift {

/// Pinhole intrinsics in pixels.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  /// Throws kInvalidArgument unless both focal lengths are positive and finite.
  void validate() const;
};

/// Maps normalized pose space (mm) into the camera frame: p_cam = R p + t.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  Points3 apply(const Points3& p) const {
    return (rotation * p).colwise() + translation;
  }
  RigidTransform inverse() const;
  /// (this * other)(p) = this(other(p)).
  RigidTransform compose(const RigidTransform& other) const;
  /// R^T R = I and det R = 1 within `tolerance`.
  bool is_valid(double tolerance = 1e-9) const;

  /// Rotation by axis-angle `omega` (left-multiplied) and translation offset.
  RigidTransform perturbed(const Eigen::Vector3d& omega, const Eigen::Vector3d& shift) const;
};

/// Projects a rotation matrix back onto SO(3).
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r);

enum class ProjectionKind { kPerspective, kRigidOnly };

struct ProjectionModel {
  ProjectionKind kind = ProjectionKind::kPerspective;
  Intrinsics intrinsics;
  RigidTransform transform;

  static ProjectionModel perspective(const Intrinsics& k, const RigidTransform& t) {
    return {ProjectionKind::kPerspective, k, t};
  }
};

/// Points at or closer than this depth (mm) cannot be projected.
inline constexpr double kMinDepthMm = 1.0;

/// Perspective projection of one point in normalized pose space. Throws
/// kBehindCamera at depth <= kMinDepthMm and kInvalidArgument for rigid-only
/// models.
Eigen::Vector2d project(const ProjectionModel& model, const Eigen::Vector3d& point);

/// Maps target joint i onto pose joint `joints[i]`; empty means identity.
using JointMap = std::span<const std::size_t>;

/// sqrt(sum_j ||M(X_j) - x_j||^2) over the target joints.
double projection_error(const Points3& pose, const ProjectionModel& model, const Pose2D& target,
                        JointMap joints = {});

/// Sum over poses of projection_error under one shared perspective camera,
/// i.e. the camera-fitting objective. Parameterized around a base transform by
/// theta = (omega, shift): transform(theta) = base.perturbed(omega, shift).
class CameraObjective {
 public:
  using Vector6d = Eigen::Matrix<double, 6, 1>;

  CameraObjective(std::vector<Points3> poses, Pose2D target, Intrinsics intrinsics,
                  std::vector<std::size_t> joints = {});

  /// +inf if any joint of any pose is at depth <= kMinDepthMm.
  double value(const RigidTransform& transform) const;
  /// Analytic gradient with respect to theta at theta = 0.
  Vector6d gradient(const RigidTransform& transform) const;
  /// Per-pose norms and the weighted normal equations of the IRLS surrogate.
  void normal_equations(const RigidTransform& transform, double eps_weight, Eigen::MatrixXd& h,
                        Eigen::VectorXd& g) const;

  std::size_t pose_count() const { return poses_.size(); }
  const Pose2D& target() const { return target_; }
  const Intrinsics& intrinsics() const { return intrinsics_; }
  const std::vector<std::size_t>& joints() const { return joints_; }

 private:
  template <typename Visit>
  bool for_each_term(const RigidTransform& transform, Visit&& visit) const;

  std::vector<Points3> poses_;
  Pose2D target_;
  Intrinsics intrinsics_;
  std::vector<std::size_t> joints_;
};

struct CameraEstimationOptions {
  double eps_weight = 1e-6;
  int max_iterations = 200;
  double relative_tolerance = 1e-10;
  /// Number of distinct neighbor viewpoints tried as starting points.
  std::size_t starts = 3;
};

struct CameraEstimate {
  RigidTransform transform;
  double objective = 0.0;
  double initial_objective = 0.0;
  /// Objective after each accepted step of the winning start.
  std::vector<double> trace;
  int iterations = 0;
};

/// Starting transform looking through `view` (a virtual camera orientation):
/// depth chosen so the pose's vertical extent matches the target's, lateral
/// offset so the joint centroids coincide.
RigidTransform initial_transform(const Points3& pose, const Eigen::Matrix3d& view,
                                 const Pose2D& target, const Intrinsics& intrinsics,
                                 JointMap joints = {});

/// Fits rotation and translation minimizing the summed projection error of the
/// retrieved poses. With `init` the optimizer starts there only; otherwise it
/// starts from the viewpoints of the first `options.starts` distinct neighbor
/// cameras in `rig` and keeps the best result.
CameraEstimate estimate_projection(const RetrievalResult& neighbors, const Pose2D& target,
                                   const Intrinsics& intrinsics,
                                   std::span<const VirtualCamera> rig,
                                   const std::optional<RigidTransform>& init = std::nullopt,
                                   JointMap joints = {},
                                   const CameraEstimationOptions& options = {});

}  // namespace poselift
