#include "poselift/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "damped_irls.hpp"
#include "poselift/error.hpp"

namespace poselift {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) ||
      !std::isfinite(cx) || !std::isfinite(cy)) {
    throw Error(ErrorCode::kInvalidArgument, "intrinsics: focal lengths must be positive");
  }
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

bool RigidTransform::is_valid(double tolerance) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  return ortho <= tolerance && std::abs(rotation.determinant() - 1.0) <= tolerance;
}

RigidTransform RigidTransform::perturbed(const Eigen::Vector3d& omega,
                                         const Eigen::Vector3d& shift) const {
  RigidTransform out;
  const double angle = omega.norm();
  Eigen::Matrix3d delta = Eigen::Matrix3d::Identity();
  if (angle > 0.0) delta = Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
  Eigen::Quaterniond q(delta * rotation);
  q.normalize();
  out.rotation = q.toRotationMatrix();
  out.translation = translation + shift;
  return out;
}

Eigen::Vector2d project(const ProjectionModel& model, const Eigen::Vector3d& point) {
  if (model.kind != ProjectionKind::kPerspective) {
    throw Error(ErrorCode::kInvalidArgument, "project: rigid-only models have no image plane");
  }
  const Eigen::Vector3d p = model.transform.apply(point);
  if (!(p.z() > kMinDepthMm)) {
    throw Error(ErrorCode::kBehindCamera,
                "project: point at depth " + std::to_string(p.z()) + " mm is behind the camera");
  }
  const auto& k = model.intrinsics;
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

namespace {

std::size_t pose_joint(JointMap joints, std::size_t i) { return joints.empty() ? i : joints[i]; }

void check_joint_map(const Points3& pose, const Pose2D& target, JointMap joints,
                     const char* where) {
  const auto m = static_cast<std::size_t>(target.joint_count());
  if (joints.empty()) {
    if (static_cast<std::size_t>(pose.cols()) != m) {
      throw Error(ErrorCode::kJointCountMismatch,
                  std::string(where) + ": pose and target joint counts differ");
    }
    return;
  }
  if (joints.size() != m) {
    throw Error(ErrorCode::kJointCountMismatch,
                std::string(where) + ": joint map length differs from target joint count");
  }
  for (auto j : joints) {
    if (j >= static_cast<std::size_t>(pose.cols())) {
      throw Error(ErrorCode::kJointCountMismatch, std::string(where) + ": joint map out of range");
    }
  }
}

}  // namespace

double projection_error(const Points3& pose, const ProjectionModel& model, const Pose2D& target,
                        JointMap joints) {
  check_joint_map(pose, target, joints, "projection_error");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < target.joint_count(); ++i) {
    const auto j = static_cast<Eigen::Index>(pose_joint(joints, static_cast<std::size_t>(i)));
    sum += (project(model, pose.col(j)) - target.joints.col(i)).squaredNorm();
  }
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------

CameraObjective::CameraObjective(std::vector<Points3> poses, Pose2D target, Intrinsics intrinsics,
                                 std::vector<std::size_t> joints)
    : poses_(std::move(poses)),
      target_(std::move(target)),
      intrinsics_(intrinsics),
      joints_(std::move(joints)) {
  intrinsics_.validate();
  if (poses_.empty()) throw Error(ErrorCode::kInvalidArgument, "camera objective: no poses");
  for (const auto& p : poses_) check_joint_map(p, target_, joints_, "estimate_projection");
}

// Calls visit(pose index, residuals 2m, jacobian 2m x 6) per pose; returns
// false if any joint is behind the camera.
template <typename Visit>
bool CameraObjective::for_each_term(const RigidTransform& transform, Visit&& visit) const {
  const auto m = target_.joint_count();
  Eigen::VectorXd r(2 * m);
  Eigen::Matrix<double, Eigen::Dynamic, 6> jac(2 * m, 6);
  const auto& k = intrinsics_;
  for (std::size_t pi = 0; pi < poses_.size(); ++pi) {
    const Points3& pose = poses_[pi];
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto j = static_cast<Eigen::Index>(pose_joint(joints_, static_cast<std::size_t>(i)));
      const Eigen::Vector3d rotated = transform.rotation * pose.col(j);
      const Eigen::Vector3d p = rotated + transform.translation;
      if (!(p.z() > kMinDepthMm)) return false;
      const double iz = 1.0 / p.z();
      r(2 * i) = k.fx * p.x() * iz + k.cx - target_.joints(0, i);
      r(2 * i + 1) = k.fy * p.y() * iz + k.cy - target_.joints(1, i);
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << k.fx * iz, 0.0, -k.fx * p.x() * iz * iz,  //
          0.0, k.fy * iz, -k.fy * p.y() * iz * iz;
      Eigen::Matrix3d dp_domega;  // -[rotated]_x
      dp_domega << 0.0, rotated.z(), -rotated.y(),  //
          -rotated.z(), 0.0, rotated.x(),           //
          rotated.y(), -rotated.x(), 0.0;
      jac.block<2, 3>(2 * i, 0) = dproj * dp_domega;
      jac.block<2, 3>(2 * i, 3) = dproj;
    }
    visit(pi, r, jac);
  }
  return true;
}

double CameraObjective::value(const RigidTransform& transform) const {
  const auto m = target_.joint_count();
  double total = 0.0;
  for (const auto& pose : poses_) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto j = static_cast<Eigen::Index>(pose_joint(joints_, static_cast<std::size_t>(i)));
      const Eigen::Vector3d p = transform.apply(Eigen::Vector3d(pose.col(j)));
      if (!(p.z() > kMinDepthMm)) return std::numeric_limits<double>::infinity();
      const double du = intrinsics_.fx * p.x() / p.z() + intrinsics_.cx - target_.joints(0, i);
      const double dv = intrinsics_.fy * p.y() / p.z() + intrinsics_.cy - target_.joints(1, i);
      sum += du * du + dv * dv;
    }
    total += std::sqrt(sum);
  }
  return total;
}

CameraObjective::Vector6d CameraObjective::gradient(const RigidTransform& transform) const {
  Vector6d grad = Vector6d::Zero();
  const bool ok = for_each_term(transform, [&](std::size_t, const Eigen::VectorXd& r,
                                               const Eigen::Matrix<double, Eigen::Dynamic, 6>& j) {
    const double e = r.norm();
    if (e > 0.0) grad += j.transpose() * r / e;
  });
  if (!ok) throw Error(ErrorCode::kBehindCamera, "camera objective: joint behind camera");
  return grad;
}

void CameraObjective::normal_equations(const RigidTransform& transform, double eps_weight,
                                       Eigen::MatrixXd& h, Eigen::VectorXd& g) const {
  h.setZero(6, 6);
  g.setZero(6);
  const bool ok = for_each_term(transform, [&](std::size_t, const Eigen::VectorXd& r,
                                               const Eigen::Matrix<double, Eigen::Dynamic, 6>& j) {
    const double w = 1.0 / std::max(r.norm(), eps_weight);
    h.noalias() += w * j.transpose() * j;
    g.noalias() += w * j.transpose() * r;
  });
  if (!ok) throw Error(ErrorCode::kBehindCamera, "camera objective: joint behind camera");
}

// ---------------------------------------------------------------------------

RigidTransform initial_transform(const Points3& pose, const Eigen::Matrix3d& view,
                                 const Pose2D& target, const Intrinsics& intrinsics,
                                 JointMap joints) {
  check_joint_map(pose, target, joints, "initial_transform");
  const auto m = target.joint_count();
  Points3 rotated(3, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    rotated.col(i) = view * pose.col(static_cast<Eigen::Index>(
                                pose_joint(joints, static_cast<std::size_t>(i))));
  }
  const double model_height = rotated.row(1).maxCoeff() - rotated.row(1).minCoeff();
  const double image_height = target.joints.row(1).maxCoeff() - target.joints.row(1).minCoeff();
  if (!(model_height > 0.0) || !(image_height > 0.0)) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "initial_transform: zero vertical extent in pose or target");
  }
  const double depth = intrinsics.fy * model_height / image_height;
  const Eigen::Vector3d centroid = rotated.rowwise().mean();
  const Eigen::Vector2d image_centroid = target.joints.rowwise().mean();

  RigidTransform t;
  t.rotation = view;
  t.translation.z() = depth;
  t.translation.x() = (image_centroid.x() - intrinsics.cx) / intrinsics.fx * depth - centroid.x();
  t.translation.y() = (image_centroid.y() - intrinsics.cy) / intrinsics.fy * depth - centroid.y();
  // Keep every joint in front of the camera.
  const double nearest = (rotated.row(2).array() + t.translation.z()).minCoeff();
  if (nearest <= kMinDepthMm) t.translation.z() += kMinDepthMm - nearest + depth * 0.1;
  return t;
}

namespace {

class CameraModel {
 public:
  CameraModel(const CameraObjective& objective, double eps) : objective_(objective), eps_(eps) {}

  double value(const RigidTransform& t) const { return objective_.value(t); }
  void normal_equations(const RigidTransform& t, Eigen::MatrixXd& h, Eigen::VectorXd& g) const {
    objective_.normal_equations(t, eps_, h, g);
  }
  RigidTransform step(const RigidTransform& t, const Eigen::VectorXd& delta) const {
    return t.perturbed(delta.head<3>(), delta.tail<3>());
  }

 private:
  const CameraObjective& objective_;
  double eps_;
};

CameraEstimate run_from(const CameraObjective& objective, const RigidTransform& start,
                        const CameraEstimationOptions& options) {
  const double f0 = objective.value(start);
  if (std::isinf(f0)) {
    throw Error(ErrorCode::kBehindCamera,
                "estimate_projection: joints behind the camera at initialization");
  }
  if (!std::isfinite(f0)) {
    throw Error(ErrorCode::kDivergence, "estimate_projection: non-finite initial objective");
  }
  detail::IrlsSettings settings;
  settings.max_iterations = options.max_iterations;
  settings.relative_tolerance = options.relative_tolerance;
  auto out = detail::damped_irls(start, f0, CameraModel(objective, options.eps_weight), settings);
  if (!std::isfinite(out.value)) {
    throw Error(ErrorCode::kDivergence, "estimate_projection: objective became non-finite");
  }
  CameraEstimate est;
  est.transform = out.state;
  est.transform.rotation = orthonormalize(est.transform.rotation);
  est.objective = objective.value(est.transform);
  if (!(est.objective <= out.value)) {
    // Re-orthonormalization moved us uphill by rounding; keep the optimizer's state.
    est.transform = out.state;
    est.objective = out.value;
  }
  est.initial_objective = f0;
  est.trace = std::move(out.trace);
  est.iterations = out.iterations;
  return est;
}

}  // namespace

CameraEstimate estimate_projection(const RetrievalResult& neighbors, const Pose2D& target,
                                   const Intrinsics& intrinsics,
                                   std::span<const VirtualCamera> rig,
                                   const std::optional<RigidTransform>& init, JointMap joints,
                                   const CameraEstimationOptions& options) {
  if (neighbors.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "estimate_projection: no neighbors");
  }
  std::vector<Points3> poses;
  poses.reserve(neighbors.size());
  for (const auto& n : neighbors.neighbors) poses.push_back(n.pose.joints);
  const CameraObjective objective(std::move(poses), target, intrinsics,
                                  std::vector<std::size_t>(joints.begin(), joints.end()));

  if (init) return run_from(objective, *init, options);

  std::vector<std::size_t> starts;  // neighbor indices with distinct camera ids
  std::vector<std::uint32_t> cameras;
  for (std::size_t i = 0; i < neighbors.size() && starts.size() < std::max<std::size_t>(options.starts, 1); ++i) {
    const auto cam = neighbors.neighbors[i].camera_id;
    if (std::find(cameras.begin(), cameras.end(), cam) != cameras.end()) continue;
    if (cam >= rig.size()) {
      throw Error(ErrorCode::kInvalidArgument, "estimate_projection: neighbor camera not in rig");
    }
    cameras.push_back(cam);
    starts.push_back(i);
  }

  std::optional<CameraEstimate> best;
  std::optional<Error> last_error;
  for (auto i : starts) {
    const auto& n = neighbors.neighbors[i];
    try {
      const RigidTransform start = initial_transform(n.pose.joints, camera_rotation(rig[n.camera_id]),
                                                     target, intrinsics, joints);
      CameraEstimate est = run_from(objective, start, options);
      if (!best || est.objective < best->objective) best = std::move(est);
    } catch (const Error& e) {
      last_error = e;
    }
  }
  if (!best) throw *last_error;
  return *best;
}

}  // namespace poselift
