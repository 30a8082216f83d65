#include "poselift/reconstruct.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "damped_irls.hpp"
#include "poselift/error.hpp"

namespace poselift {

double retrieval_energy(const Eigen::VectorXd& pose, std::span<const Eigen::VectorXd> neighbors) {
  double sum = 0.0;
  for (const auto& n : neighbors) {
    if (n.size() != pose.size()) {
      throw Error(ErrorCode::kJointCountMismatch, "retrieval_energy: joint counts differ");
    }
    sum += (n - pose).norm();
  }
  return sum;
}

double retrieval_energy(const Eigen::VectorXd& pose, const RetrievalResult& neighbors) {
  double sum = 0.0;
  for (const auto& n : neighbors.neighbors) {
    const auto flat = n.pose.flat();
    if (flat.size() != pose.size()) {
      throw Error(ErrorCode::kJointCountMismatch, "retrieval_energy: joint counts differ");
    }
    sum += (flat - pose).norm();
  }
  return sum;
}

double retrieval_energy(const Points3& pose, const RetrievalResult& neighbors) {
  return retrieval_energy(Eigen::VectorXd(pose.reshaped()), neighbors);
}

PoseObjective::PoseObjective(PcaSubspace subspace, std::span<const Eigen::VectorXd> neighbors,
                             Pose2D target, ProjectionModel camera, double alpha,
                             std::vector<std::size_t> joints)
    : subspace_(std::move(subspace)),
      target_(std::move(target)),
      camera_(std::move(camera)),
      alpha_(alpha),
      joints_(std::move(joints)) {
  camera_.intrinsics.validate();
  const auto dims = subspace_.mean.size();
  if (dims % 3 != 0 || subspace_.basis.cols() != dims) {
    throw Error(ErrorCode::kInvalidArgument, "pose objective: malformed subspace");
  }
  const auto pose_joints = static_cast<std::size_t>(dims / 3);
  if (joints_.empty()) {
    if (static_cast<std::size_t>(target_.joint_count()) != pose_joints) {
      throw Error(ErrorCode::kJointCountMismatch,
                  "reconstruct: target joint count differs from pose joint count");
    }
    for (std::size_t j = 0; j < pose_joints; ++j) joints_.push_back(j);
  } else if (joints_.size() != static_cast<std::size_t>(target_.joint_count())) {
    throw Error(ErrorCode::kJointCountMismatch,
                "reconstruct: joint map length differs from target joint count");
  }
  for (auto j : joints_) {
    if (j >= pose_joints) {
      throw Error(ErrorCode::kJointCountMismatch, "reconstruct: joint map out of range");
    }
  }

  const auto k = static_cast<Eigen::Index>(neighbors.size());
  neighbor_coefficients_.resize(subspace_.dimension(), k);
  neighbor_offsets_.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& n = neighbors[static_cast<std::size_t>(i)];
    if (n.size() != dims) {
      throw Error(ErrorCode::kJointCountMismatch, "reconstruct: neighbor joint count differs");
    }
    const Eigen::VectorXd centered = n - subspace_.mean;
    neighbor_coefficients_.col(i) = subspace_.basis * centered;
    neighbor_offsets_(i) =
        (centered - subspace_.basis.transpose() * neighbor_coefficients_.col(i)).squaredNorm();
  }
}

bool PoseObjective::projection_terms(const Eigen::VectorXd& z, Eigen::VectorXd& r,
                                     Eigen::MatrixXd* jac) const {
  const Eigen::VectorXd x = subspace_.reconstruct(z);
  const auto m = static_cast<Eigen::Index>(joints_.size());
  const auto& k = camera_.intrinsics;
  const auto& rot = camera_.transform.rotation;
  r.resize(2 * m);
  if (jac) jac->resize(2 * m, subspace_.dimension());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto j = static_cast<Eigen::Index>(joints_[static_cast<std::size_t>(i)]);
    const Eigen::Vector3d p = rot * x.segment<3>(3 * j) + camera_.transform.translation;
    if (!(p.z() > kMinDepthMm)) return false;
    const double iz = 1.0 / p.z();
    r(2 * i) = k.fx * p.x() * iz + k.cx - target_.joints(0, i);
    r(2 * i + 1) = k.fy * p.y() * iz + k.cy - target_.joints(1, i);
    if (jac) {
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << k.fx * iz, 0.0, -k.fx * p.x() * iz * iz,  //
          0.0, k.fy * iz, -k.fy * p.y() * iz * iz;
      const Eigen::Matrix<double, 2, 3> dx = dproj * rot;
      jac->middleRows<2>(2 * i).noalias() =
          dx * subspace_.basis.middleCols<3>(3 * j).transpose();
    }
  }
  return true;
}

EnergyBreakdown PoseObjective::energies(const Eigen::VectorXd& z) const {
  EnergyBreakdown e;
  e.alpha = alpha_;
  Eigen::VectorXd r;
  if (!projection_terms(z, r, nullptr)) {
    e.projection = e.total = std::numeric_limits<double>::infinity();
    return e;
  }
  e.projection = r.norm();
  double er = 0.0;
  for (Eigen::Index i = 0; i < neighbor_coefficients_.cols(); ++i) {
    er += std::sqrt((z - neighbor_coefficients_.col(i)).squaredNorm() + neighbor_offsets_(i));
  }
  e.retrieval = er;
  e.total = e.projection + alpha_ * e.retrieval;
  return e;
}

double PoseObjective::value(const Eigen::VectorXd& z) const {
  Eigen::VectorXd r;
  if (!projection_terms(z, r, nullptr)) return std::numeric_limits<double>::infinity();
  double total = r.norm();
  if (alpha_ != 0.0) {
    double er = 0.0;
    for (Eigen::Index i = 0; i < neighbor_coefficients_.cols(); ++i) {
      er += std::sqrt((z - neighbor_coefficients_.col(i)).squaredNorm() + neighbor_offsets_(i));
    }
    total += alpha_ * er;
  }
  return total;
}

Eigen::VectorXd PoseObjective::gradient(const Eigen::VectorXd& z) const {
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  if (!projection_terms(z, r, &jac)) {
    throw Error(ErrorCode::kBehindCamera, "pose objective: joint behind camera");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(z.size());
  const double ep = r.norm();
  if (ep > 0.0) grad += jac.transpose() * r / ep;
  if (alpha_ != 0.0) {
    for (Eigen::Index i = 0; i < neighbor_coefficients_.cols(); ++i) {
      const Eigen::VectorXd diff = z - neighbor_coefficients_.col(i);
      const double ek = std::sqrt(diff.squaredNorm() + neighbor_offsets_(i));
      if (ek > 0.0) grad += alpha_ * diff / ek;
    }
  }
  return grad;
}

void PoseObjective::normal_equations(const Eigen::VectorXd& z, double eps_weight,
                                     Eigen::MatrixXd& h, Eigen::VectorXd& g) const {
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  if (!projection_terms(z, r, &jac)) {
    throw Error(ErrorCode::kBehindCamera, "pose objective: joint behind camera");
  }
  const double wp = 1.0 / std::max(r.norm(), eps_weight);
  h.noalias() = wp * jac.transpose() * jac;
  g.noalias() = wp * jac.transpose() * r;
  if (alpha_ != 0.0) {
    double weight_sum = 0.0;
    for (Eigen::Index i = 0; i < neighbor_coefficients_.cols(); ++i) {
      const Eigen::VectorXd diff = z - neighbor_coefficients_.col(i);
      const double w = 1.0 / std::max(std::sqrt(diff.squaredNorm() + neighbor_offsets_(i)),
                                      eps_weight);
      weight_sum += w;
      g.noalias() += alpha_ * w * diff;
    }
    h.diagonal().array() += alpha_ * weight_sum;
  }
}

namespace {

class SubspaceModel {
 public:
  SubspaceModel(const PoseObjective& objective, double eps) : objective_(objective), eps_(eps) {}

  double value(const Eigen::VectorXd& z) const { return objective_.value(z); }
  void normal_equations(const Eigen::VectorXd& z, Eigen::MatrixXd& h, Eigen::VectorXd& g) const {
    objective_.normal_equations(z, eps_, h, g);
  }
  Eigen::VectorXd step(const Eigen::VectorXd& z, const Eigen::VectorXd& delta) const {
    return z + delta;
  }

 private:
  const PoseObjective& objective_;
  double eps_;
};

}  // namespace

ReconstructionResult reconstruct(const RetrievalResult& neighbors, const Pose2D& target,
                                 const RigidTransform& camera, const Intrinsics& intrinsics,
                                 const ReconstructionOptions& options) {
  if (neighbors.empty()) throw Error(ErrorCode::kInvalidArgument, "reconstruct: no neighbors");
  if (!(options.alpha >= 0.0) || !std::isfinite(options.alpha)) {
    throw Error(ErrorCode::kInvalidArgument, "reconstruct: alpha must be finite and >= 0");
  }
  if (!camera.is_valid(1e-6)) {
    throw Error(ErrorCode::kInvalidArgument, "reconstruct: camera rotation is not orthonormal");
  }

  std::vector<Eigen::VectorXd> flat;
  flat.reserve(neighbors.size());
  for (const auto& n : neighbors.neighbors) flat.emplace_back(n.pose.flat());

  ReconstructionResult result;
  PcaSubspace subspace;
  try {
    if (flat.size() < 2) throw Error(ErrorCode::kZeroVariance, "single neighbor");
    subspace = fit_pca(flat, options.variance_threshold);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroVariance) throw;
    // No spread to learn a subspace from: search the full pose space around
    // the (common) neighbor pose.
    const auto dims = flat.front().size();
    subspace.mean = flat.front();
    subspace.basis = Eigen::MatrixXd::Identity(dims, dims);
    subspace.explained_fraction = 1.0;
    result.degenerate_neighbors = true;
  }

  const ProjectionModel model = ProjectionModel::perspective(intrinsics, camera);
  const PoseObjective objective(subspace, flat, target, model, options.alpha, options.joints);

  const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(objective.dimension());
  const double f0 = objective.value(z0);
  if (std::isinf(f0)) {
    throw Error(ErrorCode::kBehindCamera,
                "reconstruct: neighbor centroid has joints behind the camera");
  }
  if (!std::isfinite(f0)) throw Error(ErrorCode::kDivergence, "reconstruct: non-finite energy");

  detail::IrlsSettings settings;
  settings.max_iterations = options.max_iterations;
  settings.relative_tolerance = options.relative_tolerance;
  auto out = detail::damped_irls(z0, f0, SubspaceModel(objective, options.eps_weight), settings);
  if (!std::isfinite(out.value)) {
    throw Error(ErrorCode::kDivergence, "reconstruct: energy became non-finite");
  }

  const Eigen::VectorXd x = objective.subspace().reconstruct(out.state);
  const auto joints = x.size() / 3;
  result.pose.joints = Eigen::Map<const Points3>(x.data(), 3, joints);
  result.camera = camera;
  result.neighbors = neighbors;
  result.pca_dimension = objective.dimension();
  result.explained_fraction = objective.subspace().explained_fraction;
  result.energy.alpha = options.alpha;
  result.energy.projection = projection_error(result.pose.joints, model, target, options.joints);
  result.energy.retrieval = retrieval_energy(x, neighbors);
  result.energy.total = result.energy.projection + options.alpha * result.energy.retrieval;
  result.trace = std::move(out.trace);
  result.iterations = out.iterations;
  return result;
}

}  // namespace poselift
