#include "poselift/skeleton.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <Eigen/Dense>

#include "poselift/error.hpp"

namespace poselift {

SkeletonSpec::SkeletonSpec(std::string name, std::vector<std::string> joints,
                           std::size_t root_index)
    : name_(std::move(name)), joints_(std::move(joints)), root_(root_index) {
  if (joints_.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "skeleton '" + name_ + "' needs at least 2 joints");
  }
  if (root_ >= joints_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "skeleton '" + name_ + "' root index out of range");
  }
  std::set<std::string_view> seen;
  for (const auto& j : joints_) {
    if (!seen.insert(j).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "skeleton '" + name_ + "' has duplicate joint '" + j + "'");
    }
  }
}

std::optional<std::size_t> SkeletonSpec::find(std::string_view joint) const {
  auto it = std::find(joints_.begin(), joints_.end(), joint);
  if (it == joints_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - joints_.begin());
}

std::size_t SkeletonSpec::index_of(std::string_view joint) const {
  if (auto idx = find(joint)) return *idx;
  throw Error(ErrorCode::kSkeletonMismatch,
              "skeleton '" + name_ + "' has no joint '" + std::string(joint) + "'");
}

std::vector<std::size_t> SkeletonSpec::indices_of(std::span<const std::string> subset) const {
  std::vector<std::size_t> out;
  out.reserve(subset.size());
  for (const auto& j : subset) out.push_back(index_of(j));
  return out;
}

SkeletonSpec SkeletonSpec::h36m14() {
  return SkeletonSpec("h36m14",
                      {"head", "neck", "r_shoulder", "r_elbow", "r_wrist", "l_shoulder",
                       "l_elbow", "l_wrist", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee",
                       "l_ankle"},
                      1);
}

SkeletonSpec SkeletonSpec::h36m17() {
  return SkeletonSpec("h36m17",
                      {"pelvis", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle",
                       "spine", "neck", "nose", "head", "l_shoulder", "l_elbow", "l_wrist",
                       "r_shoulder", "r_elbow", "r_wrist"},
                      0);
}

SkeletonSpec SkeletonSpec::builtin(std::string_view name) {
  if (name == "h36m14") return h36m14();
  if (name == "h36m17") return h36m17();
  throw Error(ErrorCode::kInvalidArgument, "unknown built-in skeleton '" + std::string(name) + "'");
}

std::vector<JointPair> common_joints(const SkeletonSpec& source, const SkeletonSpec& target) {
  std::vector<JointPair> out;
  for (std::size_t s = 0; s < source.joint_count(); ++s) {
    if (auto t = target.find(source.joints()[s])) out.push_back({s, *t});
  }
  return out;
}

double correspondence_distance(const Points3& source, const Points3& target,
                               std::span<const JointPair> correspondence) {
  double sum = 0.0;
  for (const auto& c : correspondence) {
    sum += (source.col(static_cast<Eigen::Index>(c.source)) -
            target.col(static_cast<Eigen::Index>(c.target)))
               .norm();
  }
  return sum / static_cast<double>(correspondence.size());
}

std::vector<SelectedPair> select_pairs(std::span<const NormalizedPose3D> source_corpus,
                                       std::span<const NormalizedPose3D> target_corpus,
                                       double threshold_mm,
                                       std::span<const JointPair> correspondence) {
  if (source_corpus.empty() || target_corpus.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "select_pairs: both corpora must be non-empty");
  }
  if (!(threshold_mm >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "select_pairs: threshold must be non-negative");
  }
  if (correspondence.empty()) {
    throw Error(ErrorCode::kSkeletonMismatch, "select_pairs: empty joint correspondence");
  }
  const auto src_joints = static_cast<std::size_t>(source_corpus.front().joint_count());
  const auto tgt_joints = static_cast<std::size_t>(target_corpus.front().joint_count());
  for (const auto& c : correspondence) {
    if (c.source >= src_joints || c.target >= tgt_joints) {
      throw Error(ErrorCode::kSkeletonMismatch,
                  "select_pairs: correspondence references a joint outside the skeleton");
    }
  }

  std::vector<SelectedPair> pairs;
  for (std::size_t i = 0; i < source_corpus.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < target_corpus.size(); ++j) {
      const double d = correspondence_distance(source_corpus[i].joints, target_corpus[j].joints,
                                               correspondence);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (best < threshold_mm) pairs.push_back({i, best_j, best});
  }
  return pairs;
}

RetargetModel RetargetModel::identity(const SkeletonSpec& skeleton) {
  RetargetModel model;
  model.source_skeleton = model.target_skeleton = skeleton.name();
  model.source_joints = model.target_joints = skeleton.joint_count();
  const auto cols = static_cast<Eigen::Index>(3 * skeleton.joint_count() + 1);
  for (std::size_t j = 0; j < skeleton.joint_count(); ++j) {
    Eigen::Matrix<double, 3, Eigen::Dynamic> m = Eigen::MatrixXd::Zero(3, cols);
    m.block<3, 3>(0, static_cast<Eigen::Index>(3 * j)).setIdentity();
    model.coefficients.push_back(std::move(m));
  }
  model.rank = static_cast<std::size_t>(cols);
  return model;
}

namespace {

std::size_t count_distinct(std::span<const Points3> poses) {
  std::vector<const Points3*> order;
  order.reserve(poses.size());
  for (const auto& p : poses) order.push_back(&p);
  auto less = [](const Points3* a, const Points3* b) {
    return std::lexicographical_compare(a->data(), a->data() + a->size(), b->data(),
                                        b->data() + b->size());
  };
  std::sort(order.begin(), order.end(), less);
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

}  // namespace

RetargetModel fit_retarget(const SkeletonSpec& source, const SkeletonSpec& target,
                           std::span<const Points3> sources, std::span<const Points3> targets) {
  if (sources.size() != targets.size()) {
    throw Error(ErrorCode::kInvalidArgument, "fit_retarget: source/target pair counts differ");
  }
  const auto js = static_cast<Eigen::Index>(source.joint_count());
  const auto jt = static_cast<Eigen::Index>(target.joint_count());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].cols() != js || targets[i].cols() != jt) {
      throw Error(ErrorCode::kSkeletonMismatch,
                  "fit_retarget: pair " + std::to_string(i) + " does not match the skeletons");
    }
  }
  const Eigen::Index p = 3 * js + 1;
  const auto n = static_cast<Eigen::Index>(sources.size());
  if (static_cast<Eigen::Index>(count_distinct(sources)) < p) {
    throw Error(ErrorCode::kRankDeficient,
                "fit_retarget: need at least " + std::to_string(p) +
                    " distinct source poses, got " + std::to_string(count_distinct(sources)));
  }

  Eigen::MatrixXd design(n, p);
  Eigen::MatrixXd response(n, 3 * jt);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = sources[static_cast<std::size_t>(i)];
    const auto& t = targets[static_cast<std::size_t>(i)];
    design.row(i).head(3 * js) = Eigen::Map<const Eigen::RowVectorXd>(s.data(), 3 * js);
    design(i, p - 1) = 1.0;
    response.row(i) = Eigen::Map<const Eigen::RowVectorXd>(t.data(), 3 * jt);
  }

  // Equilibrate columns so the cutoff is scale-free; all-zero columns stay zero.
  Eigen::VectorXd scale = design.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < p; ++c) scale(c) = scale(c) > 0.0 ? 1.0 / scale(c) : 0.0;
  const Eigen::MatrixXd scaled = design * scale.asDiagonal();

  // SVD of the design itself: through the Gram matrix a 1e-10 singular-value
  // cutoff would sit below double precision.
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sigma.size());
  std::size_t rank = 0;
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    if (sigma_max > 0.0 && sigma(k) > kRetargetSingularCutoff * sigma_max) {
      inv(k) = 1.0 / sigma(k);
      ++rank;
    }
  }
  if (rank == 0) {
    throw Error(ErrorCode::kRankDeficient, "fit_retarget: design matrix has no usable rank");
  }

  // weights: p x 3Jt, in unscaled coordinates.
  const Eigen::MatrixXd weights = scale.asDiagonal() * (svd.matrixV() * inv.asDiagonal() *
                                                        (svd.matrixU().transpose() * response));

  RetargetModel model;
  model.source_skeleton = source.name();
  model.source_joints = source.joint_count();
  model.target_skeleton = target.name();
  model.target_joints = target.joint_count();
  model.pair_count = static_cast<std::size_t>(n);
  model.rank = rank;
  model.coefficients.reserve(static_cast<std::size_t>(jt));
  for (Eigen::Index j = 0; j < jt; ++j) {
    model.coefficients.emplace_back(weights.middleCols(3 * j, 3).transpose());
  }
  const Eigen::MatrixXd residual = design * weights - response;
  model.residual_rms_mm =
      std::sqrt(residual.squaredNorm() / static_cast<double>(residual.size()));
  return model;
}

Points3 apply_retarget(const RetargetModel& model, const SkeletonSpec& pose_skeleton,
                       const Points3& pose) {
  if (pose_skeleton.name() != model.source_skeleton ||
      pose_skeleton.joint_count() != model.source_joints ||
      static_cast<std::size_t>(pose.cols()) != model.source_joints) {
    throw Error(ErrorCode::kSkeletonMismatch,
                "apply_retarget: pose skeleton '" + pose_skeleton.name() +
                    "' does not match model source '" + model.source_skeleton + "'");
  }
  const auto p = static_cast<Eigen::Index>(3 * model.source_joints);
  const Eigen::Map<const Eigen::VectorXd> flat(pose.data(), p);
  Points3 out(3, static_cast<Eigen::Index>(model.target_joints));
  for (std::size_t j = 0; j < model.target_joints; ++j) {
    const auto& m = model.coefficients[j];
    out.col(static_cast<Eigen::Index>(j)) = m.leftCols(p) * flat + m.col(p);
  }
  return out;
}

}  // namespace poselift
