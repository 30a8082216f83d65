#include "poselift/pca.hpp"

#include <vector>

#include <Eigen/Dense>

#include "poselift/error.hpp"

namespace poselift {

PcaSubspace fit_pca(std::span<const Eigen::VectorXd> poses, double variance_threshold) {
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "fit_pca: variance threshold must be in (0, 1]");
  }
  if (poses.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "fit_pca: need at least two poses");
  }
  const Eigen::Index dims = poses.front().size();
  Eigen::MatrixXd data(static_cast<Eigen::Index>(poses.size()), dims);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (poses[i].size() != dims) {
      throw Error(ErrorCode::kJointCountMismatch, "fit_pca: poses differ in size");
    }
    data.row(static_cast<Eigen::Index>(i)) = poses[i].transpose();
  }

  // Checked before centering: the mean of identical rows need not equal them.
  if ((data.rowwise() - data.row(0)).cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorCode::kZeroVariance, "fit_pca: all neighbor poses are identical");
  }
  PcaSubspace out;
  out.mean = data.colwise().mean().transpose();
  data.rowwise() -= out.mean.transpose();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dims, dims);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(data.transpose(),
                                                 1.0 / static_cast<double>(poses.size()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd values = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

  const double largest = values(0);
  if (!(largest > 0.0)) {
    throw Error(ErrorCode::kZeroVariance, "fit_pca: neighbor covariance vanishes");
  }
  Eigen::Index rank = 0;
  while (rank < values.size() && values(rank) > kPcaRankCutoff * largest) ++rank;
  const double total = values.head(rank).sum();

  Eigen::Index d = 0;
  double cumulative = 0.0;
  while (d < rank) {
    cumulative += values(d);
    ++d;
    if (cumulative >= variance_threshold * total * (1.0 - 1e-12)) break;
  }

  out.basis = vectors.leftCols(d).transpose();
  // Sign convention: largest-magnitude entry of each row is positive.
  for (Eigen::Index r = 0; r < d; ++r) {
    Eigen::Index arg = 0;
    out.basis.row(r).cwiseAbs().maxCoeff(&arg);
    if (out.basis(r, arg) < 0.0) out.basis.row(r) *= -1.0;
  }
  out.explained_fraction = std::min(cumulative / total, 1.0);
  out.eigenvalues = values.head(rank);
  return out;
}

PcaSubspace fit_pca(const RetrievalResult& neighbors, double variance_threshold) {
  std::vector<Eigen::VectorXd> poses;
  poses.reserve(neighbors.size());
  for (const auto& n : neighbors.neighbors) poses.emplace_back(n.pose.flat());
  return fit_pca(poses, variance_threshold);
}

}  // namespace poselift
