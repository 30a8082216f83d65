#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace poselift {

/// Exact k-nearest-neighbor tree over flattened 2D descriptors under the mean
/// per-joint Euclidean distance.
///
/// Nodes split on the coordinate of maximum spread at the median element.
/// Search keeps, per coordinate, the distance from the query to the current
/// cell and bounds the metric from below by averaging the per-joint norms of
/// those offsets, so pruning never drops a true neighbor. Ties are resolved by
/// ascending point id.
///
/// The tree stores point ids only; callers pass the point buffer to knn().
class DescriptorTree {
 public:
  static constexpr std::uint32_t kNoChild = 0xffffffffu;
  static constexpr std::size_t kDefaultLeafSize = 16;

  struct Node {
    std::uint32_t dim = 0;
    double threshold = 0.0;
    std::uint32_t left = kNoChild;
    std::uint32_t right = kNoChild;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;

    bool is_leaf() const { return left == kNoChild; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  struct Match {
    double distance;
    std::uint32_t id;

    friend bool operator==(const Match&, const Match&) = default;
  };

  DescriptorTree() = default;

  /// `points` holds `count` rows of `2 * joints` doubles.
  static DescriptorTree build(std::span<const double> points, std::size_t joints,
                              std::size_t leaf_size = kDefaultLeafSize);

  /// Reassembles a tree from persisted parts; validates structure against
  /// `count` points.
  static DescriptorTree from_parts(std::size_t joints, std::size_t count, std::vector<Node> nodes,
                                   std::vector<std::uint32_t> order);

  /// Up to `k` matches sorted by (distance, id).
  std::vector<Match> knn(std::span<const double> points, std::span<const double> query,
                         std::size_t k) const;

  std::size_t joints() const { return joints_; }
  std::size_t size() const { return order_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::uint32_t>& order() const { return order_; }

 private:
  std::uint32_t build_node(std::span<const double> points, std::uint32_t begin,
                           std::uint32_t end, std::size_t leaf_size);

  std::size_t joints_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
};

}  // namespace poselift
