#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "poselift/camera.hpp"
#include "poselift/index.hpp"
#include "poselift/pca.hpp"

namespace poselift {

inline constexpr double kDefaultAlpha = 1.0;

/// Sum over neighbors of the full-pose Euclidean distance to `pose`.
double retrieval_energy(const Eigen::VectorXd& pose, const RetrievalResult& neighbors);
double retrieval_energy(const Eigen::VectorXd& pose, std::span<const Eigen::VectorXd> neighbors);
double retrieval_energy(const Points3& pose, const RetrievalResult& neighbors);

struct EnergyBreakdown {
  double total = 0.0;
  double projection = 0.0;
  double retrieval = 0.0;
  double alpha = kDefaultAlpha;
};

/// Projection energy plus alpha times the retrieval energy, evaluated on poses
/// parameterized by subspace coefficients z: X = mean + basis^T z.
///
/// The retrieval term is computed inside the subspace: each neighbor splits
/// into its coefficients z_k and a constant squared out-of-subspace residual
/// c_k, so ||X - X_k||^2 = ||z - z_k||^2 + c_k.
class PoseObjective {
 public:
  PoseObjective(PcaSubspace subspace, std::span<const Eigen::VectorXd> neighbors, Pose2D target,
                ProjectionModel camera, double alpha, std::vector<std::size_t> joints = {});

  /// +inf if any observed joint falls behind the camera.
  double value(const Eigen::VectorXd& z) const;
  EnergyBreakdown energies(const Eigen::VectorXd& z) const;
  /// Analytic gradient; terms with zero norm contribute nothing.
  Eigen::VectorXd gradient(const Eigen::VectorXd& z) const;
  void normal_equations(const Eigen::VectorXd& z, double eps_weight, Eigen::MatrixXd& h,
                        Eigen::VectorXd& g) const;

  const PcaSubspace& subspace() const { return subspace_; }
  Eigen::Index dimension() const { return subspace_.dimension(); }

 private:
  // Residuals (2m) and Jacobian (2m x d) of the projection term; false when a
  // joint is behind the camera.
  bool projection_terms(const Eigen::VectorXd& z, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const;

  PcaSubspace subspace_;
  Eigen::MatrixXd neighbor_coefficients_;  // d x K
  Eigen::VectorXd neighbor_offsets_;       // K, squared out-of-subspace residual
  Pose2D target_;
  ProjectionModel camera_;
  double alpha_;
  std::vector<std::size_t> joints_;
};

struct ReconstructionOptions {
  double alpha = kDefaultAlpha;
  double variance_threshold = kDefaultVarianceThreshold;
  /// Target joint i observes pose joint joints[i]; empty means all joints.
  std::vector<std::size_t> joints;
  double eps_weight = 1e-6;
  int max_iterations = 200;
  double relative_tolerance = 1e-10;
};

struct ReconstructionResult {
  NormalizedPose3D pose;
  RigidTransform camera;
  RetrievalResult neighbors;
  EnergyBreakdown energy;
  /// Subspace dimension; 3J when the neighbors have no spread.
  Eigen::Index pca_dimension = 0;
  double explained_fraction = 1.0;
  /// True when the neighbors coincide and the search ran in the full pose space.
  bool degenerate_neighbors = false;
  std::vector<double> trace;
  int iterations = 0;

  /// The reconstructed pose in the camera frame.
  Points3 camera_space_pose() const { return camera.apply(pose.joints); }
};

/// Minimizes projection energy + alpha * retrieval energy over the PCA
/// subspace of the neighbors, starting at their centroid, with the camera
/// held fixed.
ReconstructionResult reconstruct(const RetrievalResult& neighbors, const Pose2D& target,
                                 const RigidTransform& camera, const Intrinsics& intrinsics,
                                 const ReconstructionOptions& options = {});

}  // namespace poselift
