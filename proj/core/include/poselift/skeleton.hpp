#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "poselift/types.hpp"

namespace poselift {

/// Ordered joint layout with a designated root joint.
class SkeletonSpec {
 public:
  /// Throws kInvalidArgument for duplicate names, fewer than two joints or an
  /// out-of-range root.
  SkeletonSpec(std::string name, std::vector<std::string> joints, std::size_t root_index);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& joints() const { return joints_; }
  std::size_t root_index() const { return root_; }
  std::size_t joint_count() const { return joints_.size(); }

  std::optional<std::size_t> find(std::string_view joint) const;
  /// Like find() but throws kSkeletonMismatch when the joint is absent.
  std::size_t index_of(std::string_view joint) const;

  /// Indices of "l_hip" and "r_hip"; these drive heading canonicalization.
  std::size_t left_hip() const { return index_of("l_hip"); }
  std::size_t right_hip() const { return index_of("r_hip"); }

  /// Indices (into this skeleton) of the joints named in `subset`, in the
  /// order given.
  std::vector<std::size_t> indices_of(std::span<const std::string> subset) const;

  friend bool operator==(const SkeletonSpec&, const SkeletonSpec&) = default;

  /// 14 joints: head, neck, shoulders, elbows, wrists, hips, knees, ankles.
  /// The neck is the root.
  static SkeletonSpec h36m14();
  /// 17-joint layout rooted at the pelvis.
  static SkeletonSpec h36m17();
  /// Resolves "h36m14" / "h36m17"; throws kInvalidArgument otherwise.
  static SkeletonSpec builtin(std::string_view name);

 private:
  std::string name_;
  std::vector<std::string> joints_;
  std::size_t root_;
};

/// Pairs a source joint with the target joint it corresponds to.
struct JointPair {
  std::size_t source;
  std::size_t target;
};

/// Correspondence over the joints that carry the same name in both layouts.
std::vector<JointPair> common_joints(const SkeletonSpec& source, const SkeletonSpec& target);

/// Mean Euclidean distance over the given joint correspondence.
double correspondence_distance(const Points3& source, const Points3& target,
                               std::span<const JointPair> correspondence);

struct SelectedPair {
  std::size_t source_index;
  std::size_t target_index;
  double distance_mm;
};

/// For every source pose, finds its nearest target pose under
/// correspondence_distance and keeps the pair iff the distance is strictly
/// below `threshold_mm`. Results follow source corpus order.
std::vector<SelectedPair> select_pairs(std::span<const NormalizedPose3D> source_corpus,
                                       std::span<const NormalizedPose3D> target_corpus,
                                       double threshold_mm,
                                       std::span<const JointPair> correspondence);

/// Per-target-joint affine regression from the flattened source pose.
struct RetargetModel {
  std::string source_skeleton;
  std::size_t source_joints = 0;
  std::string target_skeleton;
  std::size_t target_joints = 0;
  /// One 3 x (3 * source_joints + 1) matrix per target joint; the last column
  /// is the bias.
  std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> coefficients;
  std::size_t pair_count = 0;
  std::size_t rank = 0;
  /// Per-coordinate RMS of the fit residuals, mm.
  double residual_rms_mm = 0.0;

  static RetargetModel identity(const SkeletonSpec& skeleton);
};

/// Relative singular-value cutoff applied to the column-equilibrated design.
inline constexpr double kRetargetSingularCutoff = 1e-10;

/// Least-squares affine fit. `sources[i]` maps to `targets[i]`.
///
/// Directions of the design whose relative singular value falls below
/// kRetargetSingularCutoff are truncated (minimum-norm solution); normalized
/// poses always have a few such directions (root pinned at the origin, hip
/// line on the x axis). Fails with kRankDeficient when fewer than
/// 3 * J_src + 1 distinct source poses are supplied or nothing survives the
/// cutoff.
RetargetModel fit_retarget(const SkeletonSpec& source, const SkeletonSpec& target,
                           std::span<const Points3> sources, std::span<const Points3> targets);

/// Applies the model; `pose` must use the model's source skeleton.
Points3 apply_retarget(const RetargetModel& model, const SkeletonSpec& pose_skeleton,
                       const Points3& pose);

}  // namespace poselift
