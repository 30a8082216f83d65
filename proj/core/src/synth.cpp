#include "poselift/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "poselift/error.hpp"
#include "poselift/normalize.hpp"

namespace poselift {

namespace {

constexpr std::uint64_t kCorpusStream = 1;
constexpr std::uint64_t kFramePoseStream = 2;
constexpr std::uint64_t kFrameNoiseStream = 3;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

Bone bone(std::string joint, int parent, Eigen::Vector3d offset, AngleRange x = {0, 0},
          AngleRange y = {0, 0}, AngleRange z = {0, 0}) {
  return Bone{std::move(joint), parent, offset, {x, y, z}};
}

double uniform(std::mt19937_64& rng, AngleRange r) {
  if (r.first == r.second) return r.first;
  return std::uniform_real_distribution<double>(r.first, r.second)(rng);
}

}  // namespace

std::vector<Bone> default_body_model() {
  using V = Eigen::Vector3d;
  // Rest pose stands along +z facing +y with the right side on +x.
  return {
      bone("pelvis", -1, V::Zero()),
      bone("r_hip", 0, V(120, 0, 0)),
      bone("r_knee", 1, V(0, 0, -440), {-30, 110}, {-10, 40}, {-30, 30}),
      bone("r_ankle", 2, V(0, 0, -430), {-130, 0}),
      bone("l_hip", 0, V(-120, 0, 0)),
      bone("l_knee", 4, V(0, 0, -440), {-30, 110}, {-40, 10}, {-30, 30}),
      bone("l_ankle", 5, V(0, 0, -430), {-130, 0}),
      bone("spine", 0, V(0, 0, 220), {-45, 15}, {-20, 20}, {-30, 30}),
      bone("neck", 7, V(0, 0, 260), {-20, 10}, {-10, 10}, {-20, 20}),
      bone("nose", 8, V(0, 0, 110), {-30, 30}, {-20, 20}, {-45, 45}),
      bone("head", 9, V(0, 0, 110)),
      bone("l_shoulder", 8, V(-160, 0, -20)),
      bone("l_elbow", 11, V(0, 0, -280), {-40, 150}, {0, 100}, {-40, 40}),
      bone("l_wrist", 12, V(0, 0, -250), {0, 140}),
      bone("r_shoulder", 8, V(160, 0, -20)),
      bone("r_elbow", 14, V(0, 0, -280), {-40, 150}, {-100, 0}, {-40, 40}),
      bone("r_wrist", 15, V(0, 0, -250), {0, 140}),
  };
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 finalizer over a combined key.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

RigidTransform SynthConfig::default_camera() {
  RigidTransform t;
  t.rotation = camera_rotation({0.0, 10.0});
  t.translation = Eigen::Vector3d(0.0, 0.0, 4500.0);
  return t;
}

void SynthConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidRange, what); };
  for (const auto& [joint, len] : limb_lengths_mm) {
    if (!(len > 0.0)) bad("limb length for '" + joint + "' must be positive");
  }
  for (const auto& [joint, ranges] : angle_ranges_deg) {
    for (const auto& r : ranges) {
      if (!(r.first <= r.second)) bad("angle range for '" + joint + "' has min > max");
    }
  }
  if (!(angle_scale >= 0.0)) bad("angle_scale must be non-negative");
  if (!(root_tilt_deg >= 0.0)) bad("root_tilt_deg must be non-negative");
  if (!(noise_px >= 0.0)) bad("noise_px must be non-negative");
  if (!(yaw_jitter_deg >= 0.0)) bad("yaw_jitter_deg must be non-negative");
  if (!(yaw_step_deg >= 0.0)) bad("yaw_step_deg must be non-negative");
  if (pipeline.k == 0) bad("k must be at least 1");
  if (!(pipeline.alpha >= 0.0)) bad("alpha must be non-negative");
  if (!(pipeline.variance_threshold > 0.0 && pipeline.variance_threshold <= 1.0)) {
    bad("variance_threshold must be in (0, 1]");
  }
  if (!(pipeline.dedup_mm >= 0.0)) bad("dedup_mm must be non-negative");
  if (!camera.is_valid(1e-6)) bad("camera rotation is not orthonormal");
  intrinsics.validate();
  SkeletonSpec::builtin(skeleton);
  if (sweep) {
    static const std::vector<std::string> known = {"k",        "alpha",       "variance_threshold",
                                                   "dedup_mm", "corpus_size", "noise_px"};
    if (std::find(known.begin(), known.end(), sweep->parameter) == known.end()) {
      bad("unknown sweep parameter '" + sweep->parameter + "'");
    }
    if (sweep->values.empty()) bad("sweep has no values");
  }
}

std::vector<Bone> body_model(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<Bone> model = default_body_model();
  for (auto& b : model) {
    if (auto it = cfg.limb_lengths_mm.find(b.joint); it != cfg.limb_lengths_mm.end()) {
      if (b.parent < 0) throw Error(ErrorCode::kInvalidRange, "root joint has no limb");
      const double n = b.offset.norm();
      b.offset = n > 0.0 ? Eigen::Vector3d(b.offset / n * it->second)
                         : Eigen::Vector3d(0, 0, it->second);
    }
    if (auto it = cfg.angle_ranges_deg.find(b.joint); it != cfg.angle_ranges_deg.end()) {
      b.angles_deg = it->second;
    }
    for (auto& r : b.angles_deg) r = {r.first * cfg.angle_scale, r.second * cfg.angle_scale};
  }
  for (const auto& [joint, _] : cfg.limb_lengths_mm) {
    if (std::none_of(model.begin(), model.end(), [&](const Bone& b) { return b.joint == joint; })) {
      throw Error(ErrorCode::kInvalidRange, "limb length for unknown joint '" + joint + "'");
    }
  }
  return model;
}

Pose3D generate_pose(const std::vector<Bone>& model, const SkeletonSpec& skeleton,
                     double root_tilt_deg, std::mt19937_64& rng) {
  std::vector<Eigen::Vector3d> position(model.size());
  std::vector<Eigen::Matrix3d> frame(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    const Bone& b = model[i];
    if (b.parent < 0) {
      const double yaw = uniform(rng, {0.0, 360.0});
      const double pitch = uniform(rng, {-root_tilt_deg, root_tilt_deg});
      const double roll = uniform(rng, {-root_tilt_deg, root_tilt_deg});
      frame[i] = (Eigen::AngleAxisd(deg2rad(yaw), Eigen::Vector3d::UnitZ()) *
                  Eigen::AngleAxisd(deg2rad(roll), Eigen::Vector3d::UnitY()) *
                  Eigen::AngleAxisd(deg2rad(pitch), Eigen::Vector3d::UnitX()))
                     .toRotationMatrix();
      position[i] = Eigen::Vector3d(uniform(rng, {-2000.0, 2000.0}),
                                    uniform(rng, {-2000.0, 2000.0}), uniform(rng, {850.0, 1000.0}));
      continue;
    }
    const auto p = static_cast<std::size_t>(b.parent);
    const double ax = uniform(rng, b.angles_deg[0]);
    const double ay = uniform(rng, b.angles_deg[1]);
    const double az = uniform(rng, b.angles_deg[2]);
    const Eigen::Matrix3d local = (Eigen::AngleAxisd(deg2rad(az), Eigen::Vector3d::UnitZ()) *
                                   Eigen::AngleAxisd(deg2rad(ay), Eigen::Vector3d::UnitY()) *
                                   Eigen::AngleAxisd(deg2rad(ax), Eigen::Vector3d::UnitX()))
                                      .toRotationMatrix();
    frame[i] = frame[p] * local;
    position[i] = position[p] + frame[i] * b.offset;
  }

  Pose3D pose;
  pose.joints.resize(3, static_cast<Eigen::Index>(skeleton.joint_count()));
  for (std::size_t j = 0; j < skeleton.joint_count(); ++j) {
    const auto& name = skeleton.joints()[j];
    auto it = std::find_if(model.begin(), model.end(), [&](const Bone& b) { return b.joint == name; });
    if (it == model.end()) {
      throw Error(ErrorCode::kSkeletonMismatch, "body model has no joint '" + name + "'");
    }
    pose.joints.col(static_cast<Eigen::Index>(j)) =
        position[static_cast<std::size_t>(it - model.begin())];
  }
  return pose;
}

std::vector<Pose3D> generate_corpus(const SynthConfig& cfg) {
  const auto model = body_model(cfg);
  const SkeletonSpec skeleton = SkeletonSpec::builtin(cfg.skeleton);
  std::mt19937_64 rng(derive_seed(cfg.seed, kCorpusStream, 0));
  std::vector<Pose3D> corpus;
  corpus.reserve(cfg.corpus_size);
  for (std::size_t i = 0; i < cfg.corpus_size; ++i) {
    corpus.push_back(generate_pose(model, skeleton, cfg.root_tilt_deg, rng));
  }
  return corpus;
}

Pose2D render_observation(const Points3& pose, const ProjectionModel& camera, double sigma_px,
                          std::uint64_t seed) {
  if (!(sigma_px >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "render_observation: negative noise");
  }
  Pose2D out;
  out.joints.resize(2, pose.cols());
  for (Eigen::Index j = 0; j < pose.cols(); ++j) out.joints.col(j) = project(camera, pose.col(j));
  if (sigma_px > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma_px);
    for (Eigen::Index i = 0; i < out.joints.size(); ++i) out.joints.data()[i] += noise(rng);
  }
  return out;
}

FrameSetup make_frame(const SynthConfig& cfg, const PoseIndex& index, std::size_t frame) {
  std::mt19937_64 rng(derive_seed(cfg.seed, kFramePoseStream, frame));
  FrameSetup setup;
  if (cfg.true_pose_in_corpus) {
    const auto id = std::uniform_int_distribution<std::size_t>(0, index.pose_count() - 1)(rng);
    setup.truth = index.poses()[id];
    setup.true_pose_id = static_cast<long>(id);
  } else {
    const Pose3D raw = generate_pose(body_model(cfg), index.skeleton(), cfg.root_tilt_deg, rng);
    setup.truth = normalize_pose_3d(raw, index.skeleton());
  }
  double yaw = uniform(rng, {-cfg.yaw_jitter_deg, cfg.yaw_jitter_deg});
  if (cfg.yaw_step_deg > 0.0) yaw = std::round(yaw / cfg.yaw_step_deg) * cfg.yaw_step_deg;
  RigidTransform spin;
  spin.rotation =
      Eigen::AngleAxisd(deg2rad(yaw), Eigen::Vector3d::UnitZ()).toRotationMatrix();
  setup.camera = cfg.camera.compose(spin);
  setup.observation =
      render_observation(setup.truth.joints, ProjectionModel::perspective(cfg.intrinsics, setup.camera),
                         cfg.noise_px, derive_seed(cfg.seed, kFrameNoiseStream, frame));
  return setup;
}

namespace {

FrameRecord run_frame(const SynthConfig& cfg, const PoseIndex& index, std::size_t frame) {
  FrameRecord rec;
  rec.frame = frame;
  try {
    const FrameSetup setup = make_frame(cfg, index, frame);
    rec.true_pose_id = setup.true_pose_id;
    const auto& joints = index.descriptor_joints();
    Pose2D observed;
    observed.joints.resize(2, static_cast<Eigen::Index>(joints.size()));
    for (std::size_t i = 0; i < joints.size(); ++i) {
      observed.joints.col(static_cast<Eigen::Index>(i)) =
          setup.observation.joints.col(static_cast<Eigen::Index>(joints[i]));
    }
    const RetrievalResult neighbors = index.knn(normalize_pose_2d(observed), cfg.pipeline.k);
    rec.top_pose_id = neighbors.neighbors.front().pose_id;
    rec.top_camera_id = neighbors.neighbors.front().camera_id;
    rec.top_distance = neighbors.neighbors.front().distance;

    RigidTransform camera = setup.camera;
    if (!cfg.use_gt_camera) {
      const CameraEstimate est =
          estimate_projection(neighbors, observed, cfg.intrinsics, index.rig(), std::nullopt, joints);
      camera = est.transform;
      rec.camera_objective = est.objective;
    }

    ReconstructionOptions options;
    options.alpha = cfg.pipeline.alpha;
    options.variance_threshold = cfg.pipeline.variance_threshold;
    options.joints = joints;
    const auto start = std::chrono::steady_clock::now();
    const ReconstructionResult result =
        reconstruct(neighbors, observed, camera, cfg.intrinsics, options);
    rec.reconstruct_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    rec.error_mm = pose_error_rigid(result.pose.joints, setup.truth.joints);
    rec.projection_energy = result.energy.projection;
    rec.retrieval_energy = result.energy.retrieval;
    rec.pca_dimension = result.pca_dimension;
    rec.ok = true;
  } catch (const Error& e) {
    rec.ok = false;
    rec.failure = std::string(to_string(e.code()));
  }
  return rec;
}

void apply_sweep_value(SynthConfig& cfg, const std::string& parameter, double value) {
  if (parameter == "k") {
    cfg.pipeline.k = static_cast<std::size_t>(std::llround(value));
  } else if (parameter == "alpha") {
    cfg.pipeline.alpha = value;
  } else if (parameter == "variance_threshold") {
    cfg.pipeline.variance_threshold = value;
  } else if (parameter == "dedup_mm") {
    cfg.pipeline.dedup_mm = value;
  } else if (parameter == "corpus_size") {
    cfg.corpus_size = static_cast<std::size_t>(std::llround(value));
  } else if (parameter == "noise_px") {
    cfg.noise_px = value;
  }
}

PoseIndex build_synthetic_index(const SynthConfig& cfg) {
  const SkeletonSpec skeleton = SkeletonSpec::builtin(cfg.skeleton);
  const auto corpus = generate_corpus(cfg);
  std::vector<NormalizedPose3D> normalized;
  normalized.reserve(corpus.size());
  for (const auto& p : corpus) normalized.push_back(normalize_pose_3d(p, skeleton));
  return PoseIndex::build(skeleton, normalized, default_camera_rig(), cfg.pipeline.dedup_mm);
}

}  // namespace

std::vector<SweepPoint> run_experiment(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, double>> points;
  if (cfg.sweep) {
    for (double v : cfg.sweep->values) points.emplace_back(cfg.sweep->parameter, v);
  } else {
    points.emplace_back("", 0.0);
  }

  std::vector<SweepPoint> out;
  std::optional<PoseIndex> index;
  std::pair<std::size_t, double> index_key{0, -1.0};
  for (const auto& [parameter, value] : points) {
    SynthConfig point_cfg = cfg;
    if (!parameter.empty()) apply_sweep_value(point_cfg, parameter, value);
    point_cfg.validate();

    const std::pair<std::size_t, double> key{point_cfg.corpus_size, point_cfg.pipeline.dedup_mm};
    if (!index || key != index_key) {
      index = build_synthetic_index(point_cfg);
      index_key = key;
    }

    SweepPoint sp;
    sp.parameter = parameter;
    sp.value = value;
    sp.pipeline = point_cfg.pipeline;
    sp.corpus_poses = index->pose_count();
    std::vector<double> errors;
    for (std::size_t f = 0; f < point_cfg.frames; ++f) {
      FrameRecord rec = run_frame(point_cfg, *index, f);
      if (rec.ok) errors.push_back(rec.error_mm);
      sp.frames.push_back(std::move(rec));
    }
    sp.report = aggregate(errors, {}, Protocol::kRigidAligned);
    sp.report.failed = point_cfg.frames - errors.size();
    out.push_back(std::move(sp));
  }
  return out;
}

}  // namespace poselift
