#pragma once

#include <span>

#include <Eigen/Core>

#include "poselift/index.hpp"

namespace poselift {

/// Eigenvalues at or below this fraction of the largest count as zero.
inline constexpr double kPcaRankCutoff = 1e-10;
inline constexpr double kDefaultVarianceThreshold = 0.8;

/// Affine subspace mean + span(rows of basis) of flattened 3D poses.
struct PcaSubspace {
  Eigen::VectorXd mean;
  /// d x 3J, orthonormal rows, most significant first.
  Eigen::MatrixXd basis;
  /// Variance captured by the d rows divided by the total.
  double explained_fraction = 1.0;
  /// All covariance eigenvalues above the rank cutoff, descending.
  Eigen::VectorXd eigenvalues;

  Eigen::Index dimension() const { return basis.rows(); }
  Eigen::VectorXd reconstruct(const Eigen::VectorXd& coefficients) const {
    return mean + basis.transpose() * coefficients;
  }
  Eigen::VectorXd coefficients(const Eigen::VectorXd& point) const {
    return basis * (point - mean);
  }
};

/// PCA of the neighbor poses keeping the fewest leading components whose
/// cumulative eigenvalue fraction reaches `variance_threshold`. Throws
/// kZeroVariance when all poses coincide and kInvalidArgument for a threshold
/// outside (0, 1] or fewer than two poses.
PcaSubspace fit_pca(std::span<const Eigen::VectorXd> poses, double variance_threshold);
PcaSubspace fit_pca(const RetrievalResult& neighbors, double variance_threshold);

}  // namespace poselift
