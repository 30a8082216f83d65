#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poselift/kdtree.hpp"
#include "poselift/normalize.hpp"
#include "poselift/skeleton.hpp"
#include "poselift/types.hpp"

namespace poselift {

inline constexpr double kDefaultDedupThresholdMm = 20.0;
inline constexpr std::size_t kDefaultNeighbors = 256;

/// Greedy single pass: keeps a pose iff its mean per-joint distance to every
/// previously kept pose is >= threshold_mm. Preserves input order.
std::vector<NormalizedPose3D> dedup(std::span<const NormalizedPose3D> poses, double threshold_mm);

struct Neighbor {
  std::uint32_t pose_id;
  std::uint32_t camera_id;
  double distance;
  NormalizedPose3D pose;
};

/// Neighbors in ascending (distance, pose id, camera id) order.
struct RetrievalResult {
  std::vector<Neighbor> neighbors;

  std::size_t size() const { return neighbors.size(); }
  bool empty() const { return neighbors.empty(); }
};

/// Deduplicated normalized 3D corpus plus a kd-tree over the normalized
/// orthographic views of every pose from every rig camera.
///
/// Descriptor id = pose_id * camera_count + camera_id, so ascending id order
/// is the (pose, camera) tie-break order. Descriptors can be restricted to a
/// subset of skeleton joints (e.g. a 14-joint retrieval on a 17-joint corpus).
class PoseIndex {
 public:
  struct Options {
    double dedup_threshold_mm = kDefaultDedupThresholdMm;
    std::size_t leaf_size = DescriptorTree::kDefaultLeafSize;
    /// Skeleton joint indices used for descriptors; empty means all joints.
    std::vector<std::size_t> descriptor_joints;
  };

  static PoseIndex build(SkeletonSpec skeleton, std::span<const NormalizedPose3D> poses,
                         std::vector<VirtualCamera> rig, const Options& options);
  static PoseIndex build(SkeletonSpec skeleton, std::span<const NormalizedPose3D> poses,
                         std::vector<VirtualCamera> rig,
                         double dedup_threshold_mm = kDefaultDedupThresholdMm);

  /// Exact k nearest descriptors to `query` (already normalized, one joint per
  /// descriptor joint).
  RetrievalResult knn(const NormalizedPose2D& query, std::size_t k) const;

  const SkeletonSpec& skeleton() const { return skeleton_; }
  const std::vector<VirtualCamera>& rig() const { return rig_; }
  const std::vector<NormalizedPose3D>& poses() const { return poses_; }
  const std::vector<std::size_t>& descriptor_joints() const { return descriptor_joints_; }
  double dedup_threshold_mm() const { return dedup_threshold_mm_; }
  std::size_t leaf_size() const { return leaf_size_; }
  std::size_t pose_count() const { return poses_.size(); }
  std::size_t camera_count() const { return rig_.size(); }
  std::size_t descriptor_count() const { return poses_.size() * rig_.size(); }
  std::size_t descriptor_dims() const { return 2 * descriptor_joints_.size(); }
  const DescriptorTree& tree() const { return tree_; }
  std::span<const double> descriptor_buffer() const { return descriptors_; }
  NormalizedPose2D descriptor(std::size_t pose_id, std::size_t camera_id) const;

  /// Two-part binary form: magic, u64 header length, JSON header, then
  /// little-endian blocks (poses, descriptors, tree nodes, tree order).
  std::string serialize() const;
  static PoseIndex deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static PoseIndex load(const std::filesystem::path& path);

 private:
  PoseIndex(SkeletonSpec skeleton) : skeleton_(std::move(skeleton)) {}

  SkeletonSpec skeleton_;
  std::vector<VirtualCamera> rig_;
  std::vector<NormalizedPose3D> poses_;
  std::vector<std::size_t> descriptor_joints_;
  double dedup_threshold_mm_ = kDefaultDedupThresholdMm;
  std::size_t leaf_size_ = DescriptorTree::kDefaultLeafSize;
  std::vector<double> descriptors_;
  DescriptorTree tree_;
};

/// Orthographic view of `pose` restricted to `joints`, then 2D-normalized.
NormalizedPose2D view_descriptor(const NormalizedPose3D& pose, const VirtualCamera& cam,
                                 std::span<const std::size_t> joints);

}  // namespace poselift
