#include "poselift/index.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "poselift/error.hpp"

namespace poselift {

using nlohmann::json;

std::vector<NormalizedPose3D> dedup(std::span<const NormalizedPose3D> poses, double threshold_mm) {
  if (!(threshold_mm >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dedup: threshold must be non-negative");
  }
  std::vector<NormalizedPose3D> kept;
  for (const auto& p : poses) {
    bool keep = true;
    for (const auto& q : kept) {
      if (mean_joint_distance(p.joints, q.joints) < threshold_mm) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(p);
  }
  return kept;
}

NormalizedPose2D view_descriptor(const NormalizedPose3D& pose, const VirtualCamera& cam,
                                 std::span<const std::size_t> joints) {
  NormalizedPose3D subset;
  subset.joints.resize(3, static_cast<Eigen::Index>(joints.size()));
  for (std::size_t j = 0; j < joints.size(); ++j) {
    subset.joints.col(static_cast<Eigen::Index>(j)) =
        pose.joints.col(static_cast<Eigen::Index>(joints[j]));
  }
  return normalize_pose_2d(project_orthographic(subset, cam));
}

PoseIndex PoseIndex::build(SkeletonSpec skeleton, std::span<const NormalizedPose3D> poses,
                           std::vector<VirtualCamera> rig, double dedup_threshold_mm) {
  Options options;
  options.dedup_threshold_mm = dedup_threshold_mm;
  return build(std::move(skeleton), poses, std::move(rig), options);
}

PoseIndex PoseIndex::build(SkeletonSpec skeleton, std::span<const NormalizedPose3D> poses,
                           std::vector<VirtualCamera> rig, const Options& options) {
  if (poses.empty()) throw Error(ErrorCode::kEmptyCorpus, "build_index: empty pose list");
  if (rig.empty()) throw Error(ErrorCode::kInvalidArgument, "build_index: empty camera rig");
  const auto joints = static_cast<Eigen::Index>(skeleton.joint_count());
  for (const auto& p : poses) {
    if (p.joint_count() != joints) {
      throw Error(ErrorCode::kJointCountMismatch,
                  "build_index: pose joint count does not match skeleton '" + skeleton.name() +
                      "'");
    }
  }

  PoseIndex index(std::move(skeleton));
  index.rig_ = std::move(rig);
  index.dedup_threshold_mm_ = options.dedup_threshold_mm;
  index.leaf_size_ = options.leaf_size;
  if (options.descriptor_joints.empty()) {
    for (Eigen::Index j = 0; j < joints; ++j) {
      index.descriptor_joints_.push_back(static_cast<std::size_t>(j));
    }
  } else {
    for (auto j : options.descriptor_joints) {
      if (j >= static_cast<std::size_t>(joints)) {
        throw Error(ErrorCode::kSkeletonMismatch, "build_index: descriptor joint out of range");
      }
    }
    index.descriptor_joints_ = options.descriptor_joints;
  }

  index.poses_ = dedup(poses, options.dedup_threshold_mm);
  if (index.poses_.empty()) {
    throw Error(ErrorCode::kEmptyAfterDedup, "build_index: no poses left after dedup");
  }

  const std::size_t dims = index.descriptor_dims();
  index.descriptors_.resize(index.descriptor_count() * dims);
  for (std::size_t p = 0; p < index.poses_.size(); ++p) {
    for (std::size_t c = 0; c < index.rig_.size(); ++c) {
      const NormalizedPose2D d =
          view_descriptor(index.poses_[p], index.rig_[c], index.descriptor_joints_);
      std::memcpy(index.descriptors_.data() + (p * index.rig_.size() + c) * dims,
                  d.joints.data(), dims * sizeof(double));
    }
  }
  index.tree_ = DescriptorTree::build(index.descriptors_, index.descriptor_joints_.size(),
                                      index.leaf_size_);
  return index;
}

RetrievalResult PoseIndex::knn(const NormalizedPose2D& query, std::size_t k) const {
  if (static_cast<std::size_t>(query.joint_count()) != descriptor_joints_.size()) {
    throw Error(ErrorCode::kJointCountMismatch,
                "knn: query has " + std::to_string(query.joint_count()) +
                    " joints, index descriptors use " +
                    std::to_string(descriptor_joints_.size()));
  }
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "knn: k must be at least 1");
  const auto matches =
      tree_.knn(descriptors_, std::span<const double>(query.joints.data(), descriptor_dims()), k);
  RetrievalResult result;
  result.neighbors.reserve(matches.size());
  for (const auto& m : matches) {
    const auto pose_id = static_cast<std::uint32_t>(m.id / rig_.size());
    const auto camera_id = static_cast<std::uint32_t>(m.id % rig_.size());
    result.neighbors.push_back(Neighbor{pose_id, camera_id, m.distance, poses_[pose_id]});
  }
  return result;
}

NormalizedPose2D PoseIndex::descriptor(std::size_t pose_id, std::size_t camera_id) const {
  if (pose_id >= poses_.size() || camera_id >= rig_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "descriptor: id out of range");
  }
  const std::size_t dims = descriptor_dims();
  NormalizedPose2D out;
  out.joints = Eigen::Map<const Points2>(
      descriptors_.data() + (pose_id * rig_.size() + camera_id) * dims, 2,
      static_cast<Eigen::Index>(descriptor_joints_.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Binary persistence

namespace {

constexpr char kMagic[8] = {'P', 'O', 'S', 'E', 'L', 'I', 'D', 'X'};
constexpr int kFormatVersion = 1;
constexpr std::size_t kNodeRecordBytes = 4 + 8 + 4 + 4 + 4 + 4;

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
}

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    value = to_little(value);
    const auto* p = reinterpret_cast<const char*>(&value);
    out_.append(p, sizeof(T));
  }
  void put_bytes(std::string_view s) { out_.append(s); }
  std::size_t size() const { return out_.size(); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(value);
  }
  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void seek(std::size_t pos) {
    if (pos > bytes_.size()) fail("offset beyond end of file");
    pos_ = pos;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail("unexpected end of index file");
  }
  [[noreturn]] static void fail(const std::string& what) {
    throw Error(ErrorCode::kParse, "index: " + what);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

json block(std::size_t offset, std::size_t size) { return {{"offset", offset}, {"size", size}}; }

}  // namespace

std::string PoseIndex::serialize() const {
  const std::size_t joints = skeleton_.joint_count();
  const std::size_t pose_bytes = poses_.size() * 3 * joints * sizeof(double);
  const std::size_t desc_bytes = descriptors_.size() * sizeof(double);
  const std::size_t node_bytes = tree_.nodes().size() * kNodeRecordBytes;
  const std::size_t order_bytes = tree_.order().size() * sizeof(std::uint32_t);

  json rig = json::array();
  for (const auto& c : rig_) rig.push_back({c.azimuth_deg, c.elevation_deg});

  json header = {
      {"format", "poselift-index"},
      {"version", kFormatVersion},
      {"skeleton",
       {{"name", skeleton_.name()},
        {"joints", skeleton_.joints()},
        {"root", skeleton_.root_index()}}},
      {"descriptor_joints", descriptor_joints_},
      {"rig", rig},
      {"dedup_threshold_mm", dedup_threshold_mm_},
      {"leaf_size", leaf_size_},
      {"counts",
       {{"poses", poses_.size()},
        {"cameras", rig_.size()},
        {"descriptors", descriptor_count()},
        {"joints", joints},
        {"descriptor_dims", descriptor_dims()},
        {"nodes", tree_.nodes().size()}}},
      {"node_record", "u32 dim, f64 threshold, u32 left, u32 right, u32 begin, u32 end"},
      {"blocks",
       {{"poses", block(0, pose_bytes)},
        {"descriptors", block(pose_bytes, desc_bytes)},
        {"nodes", block(pose_bytes + desc_bytes, node_bytes)},
        {"order", block(pose_bytes + desc_bytes + node_bytes, order_bytes)}}},
  };
  const std::string header_text = header.dump();

  ByteWriter w;
  w.put_bytes(std::string_view(kMagic, sizeof(kMagic)));
  w.put<std::uint64_t>(header_text.size());
  w.put_bytes(header_text);
  for (const auto& p : poses_) {
    for (Eigen::Index i = 0; i < p.joints.size(); ++i) w.put<double>(p.joints.data()[i]);
  }
  for (double v : descriptors_) w.put<double>(v);
  for (const auto& n : tree_.nodes()) {
    w.put<std::uint32_t>(n.dim);
    w.put<double>(n.threshold);
    w.put<std::uint32_t>(n.left);
    w.put<std::uint32_t>(n.right);
    w.put<std::uint32_t>(n.begin);
    w.put<std::uint32_t>(n.end);
  }
  for (auto id : tree_.order()) w.put<std::uint32_t>(id);
  return w.take();
}

PoseIndex PoseIndex::deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.get_bytes(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw Error(ErrorCode::kParse, "index: bad magic, not a poselift index file");
  }
  const auto header_len = r.get<std::uint64_t>();
  json header;
  try {
    header = json::parse(r.get_bytes(header_len));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("index: malformed header: ") + e.what());
  }
  const std::size_t data_start = r.position();

  try {
    if (header.at("format") != "poselift-index" || header.at("version") != kFormatVersion) {
      throw Error(ErrorCode::kParse, "index: unsupported format or version");
    }
    const auto& sk = header.at("skeleton");
    PoseIndex index(SkeletonSpec(sk.at("name").get<std::string>(),
                                 sk.at("joints").get<std::vector<std::string>>(),
                                 sk.at("root").get<std::size_t>()));
    index.descriptor_joints_ = header.at("descriptor_joints").get<std::vector<std::size_t>>();
    for (const auto& c : header.at("rig")) {
      index.rig_.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    }
    index.dedup_threshold_mm_ = header.at("dedup_threshold_mm").get<double>();
    index.leaf_size_ = header.at("leaf_size").get<std::size_t>();

    const auto& counts = header.at("counts");
    const auto n_poses = counts.at("poses").get<std::size_t>();
    const auto n_nodes = counts.at("nodes").get<std::size_t>();
    const std::size_t joints = index.skeleton_.joint_count();
    if (counts.at("joints").get<std::size_t>() != joints ||
        counts.at("cameras").get<std::size_t>() != index.rig_.size() ||
        counts.at("descriptor_dims").get<std::size_t>() != index.descriptor_dims() ||
        counts.at("descriptors").get<std::size_t>() != n_poses * index.rig_.size()) {
      throw Error(ErrorCode::kParse, "index: header counts are inconsistent");
    }
    for (auto j : index.descriptor_joints_) {
      if (j >= joints) throw Error(ErrorCode::kParse, "index: descriptor joint out of range");
    }

    const auto& blocks = header.at("blocks");
    auto seek_block = [&](const char* name, std::size_t expected) {
      const auto& b = blocks.at(name);
      if (b.at("size").get<std::size_t>() != expected) {
        throw Error(ErrorCode::kParse, std::string("index: block '") + name + "' has wrong size");
      }
      r.seek(data_start + b.at("offset").get<std::size_t>());
    };

    seek_block("poses", n_poses * 3 * joints * sizeof(double));
    index.poses_.resize(n_poses);
    for (auto& p : index.poses_) {
      p.joints.resize(3, static_cast<Eigen::Index>(joints));
      for (Eigen::Index i = 0; i < p.joints.size(); ++i) p.joints.data()[i] = r.get<double>();
    }

    const std::size_t n_desc_values = index.descriptor_count() * index.descriptor_dims();
    seek_block("descriptors", n_desc_values * sizeof(double));
    index.descriptors_.resize(n_desc_values);
    for (auto& v : index.descriptors_) v = r.get<double>();

    seek_block("nodes", n_nodes * kNodeRecordBytes);
    std::vector<DescriptorTree::Node> nodes(n_nodes);
    for (auto& n : nodes) {
      n.dim = r.get<std::uint32_t>();
      n.threshold = r.get<double>();
      n.left = r.get<std::uint32_t>();
      n.right = r.get<std::uint32_t>();
      n.begin = r.get<std::uint32_t>();
      n.end = r.get<std::uint32_t>();
    }

    seek_block("order", index.descriptor_count() * sizeof(std::uint32_t));
    std::vector<std::uint32_t> order(index.descriptor_count());
    for (auto& id : order) id = r.get<std::uint32_t>();

    index.tree_ = DescriptorTree::from_parts(index.descriptor_joints_.size(),
                                             index.descriptor_count(), std::move(nodes),
                                             std::move(order));
    return index;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("index: bad header field: ") + e.what());
  }
}

void PoseIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

PoseIndex PoseIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace poselift
