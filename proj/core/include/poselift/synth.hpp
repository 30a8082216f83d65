#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "poselift/camera.hpp"
#include "poselift/eval.hpp"
#include "poselift/index.hpp"
#include "poselift/pca.hpp"
#include "poselift/reconstruct.hpp"
#include "poselift/skeleton.hpp"

namespace poselift {

using AngleRange = std::pair<double, double>;  // degrees, min <= max

/// One segment of the body tree. Euler angles (x, then y, then z, applied as
/// Rz * Ry * Rx) are sampled per pose at the parent joint and rotate the
/// segment's rest offset.
struct Bone {
  std::string joint;
  int parent = -1;  // index into the bone list, -1 for the root
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  std::array<AngleRange, 3> angles_deg{};
};

/// Fixed-topology body tree over the h36m17 joint names; pelvis is the root.
std::vector<Bone> default_body_model();

/// Deterministic 64-bit mix of (seed, stream, index); frame streams are derived
/// with it so results never depend on evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

struct PipelineParams {
  std::size_t k = kDefaultNeighbors;
  double alpha = kDefaultAlpha;
  double variance_threshold = kDefaultVarianceThreshold;
  double dedup_mm = kDefaultDedupThresholdMm;
};

struct SweepSpec {
  /// One of: k, alpha, variance_threshold, dedup_mm, corpus_size, noise_px.
  std::string parameter;
  std::vector<double> values;
};

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t corpus_size = 2000;
  std::string skeleton = "h36m14";
  /// Overrides keyed by the bone's (child) joint name.
  std::map<std::string, double> limb_lengths_mm;
  std::map<std::string, std::array<AngleRange, 3>> angle_ranges_deg;
  /// Multiplies every joint-angle range; < 1 tightens the pose cloud.
  double angle_scale = 1.0;
  /// Root pitch/roll range (+-), degrees; yaw is uniform over a full turn.
  double root_tilt_deg = 10.0;

  std::size_t frames = 100;
  double noise_px = 0.0;
  bool true_pose_in_corpus = false;
  /// Use the true camera instead of estimating it.
  bool use_gt_camera = false;

  Intrinsics intrinsics{1000.0, 1000.0, 500.0, 500.0};
  /// Base camera in normalized pose space.
  RigidTransform camera = default_camera();
  /// Per-frame extra yaw of the subject, uniform in [-jitter, jitter].
  double yaw_jitter_deg = 180.0;
  /// When > 0 the per-frame yaw is rounded to a multiple of this step.
  double yaw_step_deg = 0.0;

  PipelineParams pipeline;
  std::optional<SweepSpec> sweep;

  /// Throws kInvalidRange for non-positive lengths, inverted angle ranges or
  /// out-of-range pipeline settings.
  void validate() const;

  static RigidTransform default_camera();
};

/// The configured body tree (overrides and angle scale applied).
std::vector<Bone> body_model(const SynthConfig& cfg);

/// One random pose in the cfg skeleton's joint order.
Pose3D generate_pose(const std::vector<Bone>& model, const SkeletonSpec& skeleton,
                     double root_tilt_deg, std::mt19937_64& rng);

/// corpus_size poses, reproducible from cfg.seed. A corpus is a prefix of any
/// larger corpus generated with the same seed.
std::vector<Pose3D> generate_corpus(const SynthConfig& cfg);

/// Perspective projection plus isotropic Gaussian pixel noise.
Pose2D render_observation(const Points3& pose, const ProjectionModel& camera, double sigma_px,
                          std::uint64_t seed);

struct FrameRecord {
  std::size_t frame = 0;
  bool ok = false;
  std::string failure;  // error code when !ok
  double error_mm = 0.0;
  double projection_energy = 0.0;
  double retrieval_energy = 0.0;
  double camera_objective = 0.0;
  long true_pose_id = -1;  // index pose id when the truth is in the corpus
  std::uint32_t top_pose_id = 0;
  std::uint32_t top_camera_id = 0;
  double top_distance = 0.0;
  Eigen::Index pca_dimension = 0;
  /// Wall-clock seconds in reconstruct(); not part of any serialized output.
  double reconstruct_seconds = 0.0;
};

struct SweepPoint {
  std::string parameter;  // empty for a single run
  double value = 0.0;
  PipelineParams pipeline;
  std::size_t corpus_poses = 0;  // after dedup
  EvalReport report;
  std::vector<FrameRecord> frames;
};

/// Runs the full pipeline over cfg.frames synthetic frames for every sweep
/// value (or once without a sweep). Frame failures are recorded, not thrown.
std::vector<SweepPoint> run_experiment(const SynthConfig& cfg);

/// Single-frame pipeline used by run_experiment, exposed for tests.
struct FrameSetup {
  NormalizedPose3D truth;
  long true_pose_id = -1;
  RigidTransform camera;
  Pose2D observation;
};
FrameSetup make_frame(const SynthConfig& cfg, const PoseIndex& index, std::size_t frame);

}  // namespace poselift
