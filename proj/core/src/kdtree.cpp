#include "poselift/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "poselift/error.hpp"
#include "poselift/normalize.hpp"

namespace poselift {

DescriptorTree DescriptorTree::build(std::span<const double> points, std::size_t joints,
                                     std::size_t leaf_size) {
  if (joints == 0) throw Error(ErrorCode::kInvalidArgument, "kd-tree: zero joints");
  const std::size_t dims = 2 * joints;
  if (points.size() % dims != 0) {
    throw Error(ErrorCode::kInvalidArgument, "kd-tree: point buffer is not a multiple of 2J");
  }
  const std::size_t count = points.size() / dims;
  if (count >= kNoChild) throw Error(ErrorCode::kInvalidArgument, "kd-tree: too many points");

  DescriptorTree tree;
  tree.joints_ = joints;
  tree.order_.resize(count);
  for (std::size_t i = 0; i < count; ++i) tree.order_[i] = static_cast<std::uint32_t>(i);
  if (count > 0) {
    tree.build_node(points, 0, static_cast<std::uint32_t>(count), std::max<std::size_t>(leaf_size, 1));
  }
  return tree;
}

std::uint32_t DescriptorTree::build_node(std::span<const double> points, std::uint32_t begin,
                                         std::uint32_t end, std::size_t leaf_size) {
  const std::size_t dims = 2 * joints_;
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{0, 0.0, kNoChild, kNoChild, begin, end});
  if (end - begin <= leaf_size) return index;

  std::uint32_t split_dim = 0;
  double best_spread = 0.0;
  for (std::size_t d = 0; d < dims; ++d) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::uint32_t i = begin; i < end; ++i) {
      const double v = points[order_[i] * dims + d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      split_dim = static_cast<std::uint32_t>(d);
    }
  }
  if (best_spread <= 0.0) return index;  // all points coincide

  const std::uint32_t mid = begin + (end - begin) / 2;
  auto key = [&](std::uint32_t id) { return points[id * dims + split_dim]; };
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ka = key(a);
                     const double kb = key(b);
                     return ka < kb || (ka == kb && a < b);
                   });
  const double threshold = key(order_[mid]);

  const std::uint32_t left = build_node(points, begin, mid, leaf_size);
  const std::uint32_t right = build_node(points, mid, end, leaf_size);
  Node& node = nodes_[index];
  node.dim = split_dim;
  node.threshold = threshold;
  node.left = left;
  node.right = right;
  return index;
}

DescriptorTree DescriptorTree::from_parts(std::size_t joints, std::size_t count,
                                          std::vector<Node> nodes,
                                          std::vector<std::uint32_t> order) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kParse, "kd-tree structure invalid: " + what);
  };
  if (order.size() != count) fail("order length differs from point count");
  std::vector<bool> seen(count, false);
  for (auto id : order) {
    if (id >= count || seen[id]) fail("order is not a permutation");
    seen[id] = true;
  }
  if (count > 0 && nodes.empty()) fail("missing root node");
  for (const auto& n : nodes) {
    if (n.begin > n.end || n.end > count) fail("node range out of bounds");
    if (!n.is_leaf()) {
      if (n.left >= nodes.size() || n.right >= nodes.size()) fail("child offset out of bounds");
      if (n.dim >= 2 * joints) fail("split dimension out of range");
    }
  }
  DescriptorTree tree;
  tree.joints_ = joints;
  tree.nodes_ = std::move(nodes);
  tree.order_ = std::move(order);
  return tree;
}

namespace {

struct MatchLess {
  bool operator()(const DescriptorTree::Match& a, const DescriptorTree::Match& b) const {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  }
};

// Relative slack on the lower bound; it only widens the search.
constexpr double kBoundSlack = 1e-9;

class Searcher {
 public:
  Searcher(const DescriptorTree& tree, std::span<const double> points,
           std::span<const double> query, std::size_t k)
      : tree_(tree),
        points_(points),
        query_(query),
        k_(k),
        joints_(tree.joints()),
        offsets_(2 * tree.joints(), 0.0) {}

  std::vector<DescriptorTree::Match> run() {
    if (!tree_.nodes().empty() && k_ > 0) visit(0, 0.0);
    std::vector<DescriptorTree::Match> out;
    out.reserve(heap_.size());
    while (!heap_.empty()) {
      out.push_back(heap_.top());
      heap_.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  bool could_improve(double bound_sum) const {
    if (heap_.size() < k_) return true;
    const double bound = bound_sum / static_cast<double>(joints_);
    return bound * (1.0 - kBoundSlack) <= heap_.top().distance;
  }

  void offer(std::uint32_t id) {
    const std::size_t dims = 2 * joints_;
    const double d = descriptor_distance(points_.data() + id * dims, query_.data(), joints_);
    DescriptorTree::Match m{d, id};
    if (heap_.size() < k_) {
      heap_.push(m);
    } else if (MatchLess{}(m, heap_.top())) {
      heap_.pop();
      heap_.push(m);
    }
  }

  double joint_bound(std::size_t joint) const {
    return std::hypot(offsets_[2 * joint], offsets_[2 * joint + 1]);
  }

  void visit(std::uint32_t index, double bound_sum) {
    const auto& node = tree_.nodes()[index];
    if (node.is_leaf()) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) offer(tree_.order()[i]);
      return;
    }
    const double diff = query_[node.dim] - node.threshold;
    const std::uint32_t near = diff <= 0.0 ? node.left : node.right;
    const std::uint32_t far = diff <= 0.0 ? node.right : node.left;

    visit(near, bound_sum);

    const std::size_t joint = node.dim / 2;
    const double old_offset = offsets_[node.dim];
    const double new_offset = std::max(old_offset, std::abs(diff));
    const double old_term = joint_bound(joint);
    offsets_[node.dim] = new_offset;
    const double far_bound = bound_sum - old_term + joint_bound(joint);
    if (could_improve(far_bound)) visit(far, far_bound);
    offsets_[node.dim] = old_offset;
  }

  const DescriptorTree& tree_;
  std::span<const double> points_;
  std::span<const double> query_;
  std::size_t k_;
  std::size_t joints_;
  std::vector<double> offsets_;
  std::priority_queue<DescriptorTree::Match, std::vector<DescriptorTree::Match>, MatchLess> heap_;
};

}  // namespace

std::vector<DescriptorTree::Match> DescriptorTree::knn(std::span<const double> points,
                                                       std::span<const double> query,
                                                       std::size_t k) const {
  if (query.size() != 2 * joints_) {
    throw Error(ErrorCode::kJointCountMismatch, "kd-tree: query dimension mismatch");
  }
  if (points.size() != order_.size() * 2 * joints_) {
    throw Error(ErrorCode::kInvalidArgument, "kd-tree: point buffer does not match the tree");
  }
  return Searcher(*this, points, query, k).run();
}

}  // namespace poselift
