#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "poselift/error.hpp"
#include "poselift/synth.hpp"
#include "support.hpp"

namespace poselift {
namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.corpus_size = 300;
  cfg.frames = 12;
  cfg.pipeline.k = 32;
  return cfg;
}

TEST(Synth, CorpusIsDeterministicAndPrefixStable) {
  SynthConfig cfg;
  cfg.corpus_size = 50;
  const auto a = generate_corpus(cfg);
  const auto b = generate_corpus(cfg);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].joints, b[i].joints);
  cfg.corpus_size = 80;
  const auto c = generate_corpus(cfg);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].joints, c[i].joints);
  cfg.seed = 2;
  EXPECT_NE(generate_corpus(cfg)[0].joints, a[0].joints);
  cfg.corpus_size = 0;
  EXPECT_TRUE(generate_corpus(cfg).empty());
}

TEST(Synth, LimbLengthsMatchTheModel) {
  SynthConfig cfg;
  cfg.corpus_size = 200;
  cfg.skeleton = "h36m17";
  cfg.limb_lengths_mm["l_knee"] = 420.0;
  cfg.limb_lengths_mm["r_wrist"] = 300.0;
  const auto model = body_model(cfg);
  const auto s = SkeletonSpec::h36m17();
  for (const auto& pose : generate_corpus(cfg)) {
    ASSERT_EQ(pose.joints.cols(), 17);
    for (const auto& bone : model) {
      if (bone.parent < 0) continue;
      const auto child = static_cast<Eigen::Index>(s.index_of(bone.joint));
      const auto parent =
          static_cast<Eigen::Index>(s.index_of(model[static_cast<std::size_t>(bone.parent)].joint));
      const double length = (pose.joints.col(child) - pose.joints.col(parent)).norm();
      double want = bone.offset.norm();
      if (auto it = cfg.limb_lengths_mm.find(bone.joint); it != cfg.limb_lengths_mm.end()) {
        want = it->second;
      }
      EXPECT_NEAR(length, want, 1e-9) << bone.joint;
    }
  }
}

TEST(Synth, AnglesStayInRange) {
  // Zero-width ranges pin every joint: all poses equal the rest pose up to
  // root yaw and tilt, so pairwise joint distances are identical.
  SynthConfig cfg;
  cfg.corpus_size = 20;
  cfg.angle_scale = 0.0;
  const auto corpus = generate_corpus(cfg);
  for (const auto& p : corpus) {
    for (Eigen::Index i = 0; i < p.joints.cols(); ++i) {
      for (Eigen::Index j = i + 1; j < p.joints.cols(); ++j) {
        EXPECT_NEAR((p.joints.col(i) - p.joints.col(j)).norm(),
                    (corpus[0].joints.col(i) - corpus[0].joints.col(j)).norm(), 1e-9);
      }
    }
  }
}

TEST(Synth, ValidationRejectsBadRanges) {
  auto expect_range = [](const SynthConfig& cfg) {
    try {
      cfg.validate();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidRange);
    }
  };
  SynthConfig cfg;
  cfg.limb_lengths_mm["l_knee"] = 0.0;
  expect_range(cfg);
  cfg = {};
  cfg.angle_ranges_deg["l_knee"] = {AngleRange{10, -10}, AngleRange{0, 0}, AngleRange{0, 0}};
  expect_range(cfg);
  cfg = {};
  cfg.noise_px = -1;
  expect_range(cfg);
  cfg = {};
  cfg.pipeline.k = 0;
  expect_range(cfg);
  cfg = {};
  cfg.pipeline.variance_threshold = 1.5;
  expect_range(cfg);
  cfg = {};
  cfg.sweep = SweepSpec{"gamma", {1}};
  expect_range(cfg);
  cfg = {};
  cfg.sweep = SweepSpec{"alpha", {}};
  expect_range(cfg);
  cfg = {};
  EXPECT_THROW(generate_corpus([] {
                 SynthConfig c;
                 c.limb_lengths_mm["head"] = -5;
                 return c;
               }()),
               Error);
}

TEST(Synth, RenderObservation) {
  std::mt19937_64 rng(1);
  const SynthConfig cfg;
  const auto model = ProjectionModel::perspective(cfg.intrinsics, cfg.camera);
  const Points3 pose = test::normalized_body_pose(rng).joints;
  const auto exact = render_observation(pose, model, 0.0, 7);
  for (Eigen::Index j = 0; j < pose.cols(); ++j) {
    EXPECT_EQ(exact.joints.col(j), project(model, pose.col(j)));
  }
  const auto a = render_observation(pose, model, 2.0, 7);
  const auto b = render_observation(pose, model, 2.0, 7);
  EXPECT_EQ(a.joints, b.joints);
  EXPECT_NE(a.joints, render_observation(pose, model, 2.0, 8).joints);

  // Monte-Carlo: 10^4 residual coordinates.
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; n < 10000; ++seed) {
    const Points2 r = render_observation(pose, model, 2.0, seed).joints - exact.joints;
    for (Eigen::Index i = 0; i < r.size() && n < 10000; ++i, ++n) {
      sum += r.data()[i];
      sq += r.data()[i] * r.data()[i];
    }
  }
  const double mean = sum / 10000.0;
  const double sd = std::sqrt(sq / 10000.0 - mean * mean);
  EXPECT_GE(sd, 1.9);
  EXPECT_LE(sd, 2.1);

  RigidTransform behind = cfg.camera;
  behind.translation.z() = -5000;
  EXPECT_THROW(render_observation(pose, ProjectionModel::perspective(cfg.intrinsics, behind), 0, 1),
               Error);
}

TEST(Synth, DeriveSeedSeparatesStreams) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(2, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 2, 4));
}

TEST(Synth, TruePoseFramesAreRetrievedExactly) {
  SynthConfig cfg = small_config();
  cfg.true_pose_in_corpus = true;
  cfg.use_gt_camera = true;
  cfg.yaw_step_deg = 15.0;
  cfg.camera.rotation = camera_rotation({0, 15});
  // Telephoto: perspective effects vanish, so the view matches a rig view.
  const double z = 1e12;
  cfg.camera.translation = {0, 0, z};
  cfg.intrinsics = {1000 * z / 4500, 1000 * z / 4500, 500, 500};
  const auto points = run_experiment(cfg);
  ASSERT_EQ(points.size(), 1u);
  for (const auto& f : points[0].frames) {
    ASSERT_TRUE(f.ok) << f.failure;
    EXPECT_EQ(static_cast<long>(f.top_pose_id), f.true_pose_id);
    EXPECT_LT(f.top_distance, 1e-9);
  }
}

TEST(Synth, MakeFrameIsIndependentOfOrder) {
  SynthConfig cfg = small_config();
  SynthConfig none = cfg;
  none.corpus_size = 10;
  const auto corpus = generate_corpus(none);
  std::vector<NormalizedPose3D> normalized;
  for (const auto& p : corpus) normalized.push_back(normalize_pose_3d(p, SkeletonSpec::h36m14()));
  const auto index = PoseIndex::build(SkeletonSpec::h36m14(), normalized, default_camera_rig());
  cfg.noise_px = 3.0;
  const auto late = make_frame(cfg, index, 9);
  const auto early = make_frame(cfg, index, 2);
  EXPECT_EQ(make_frame(cfg, index, 9).observation.joints, late.observation.joints);
  EXPECT_EQ(make_frame(cfg, index, 2).observation.joints, early.observation.joints);
  EXPECT_NE(late.observation.joints, early.observation.joints);
}

TEST(Synth, ExperimentIsDeterministic) {
  SynthConfig cfg = small_config();
  cfg.noise_px = 2.0;
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].report.errors, b[0].report.errors);
  EXPECT_EQ(a[0].report.failed, b[0].report.failed);
  EXPECT_EQ(a[0].corpus_poses, b[0].corpus_poses);
  EXPECT_LE(a[0].corpus_poses, cfg.corpus_size);
  EXPECT_EQ(a[0].report.errors.size() + a[0].report.failed, cfg.frames);
}

TEST(Synth, AlphaSweepRelaxationOrdering) {
  SynthConfig cfg = small_config();
  cfg.sweep = SweepSpec{"alpha", {0, 0.1, 1, 10}};
  const auto points = run_experiment(cfg);
  ASSERT_EQ(points.size(), 4u);
  EXPECT_EQ(points[0].pipeline.alpha, 0.0);
  EXPECT_EQ(points[3].pipeline.alpha, 10.0);
  const auto& zero = points[0].frames;
  const auto& one = points[2].frames;
  for (std::size_t f = 0; f < zero.size(); ++f) {
    if (!zero[f].ok || !one[f].ok) continue;
    EXPECT_EQ(zero[f].camera_objective, one[f].camera_objective);
    EXPECT_LE(zero[f].projection_energy, one[f].projection_energy + 1e-9) << "frame " << f;
  }
}

TEST(Synth, NeighborCountSweepTrend) {
  SynthConfig cfg = small_config();
  cfg.corpus_size = 1000;
  cfg.frames = 30;
  cfg.sweep = SweepSpec{"k", {1, 16, 256}};
  const auto points = run_experiment(cfg);
  ASSERT_EQ(points.size(), 3u);
  std::size_t better = 0, compared = 0;
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    const auto& k1 = points[0].frames[f];
    const auto& k256 = points[2].frames[f];
    if (!k1.ok || !k256.ok) continue;
    ++compared;
    if (k256.error_mm <= k1.error_mm) ++better;
  }
  ASSERT_GT(compared, 0u);
  EXPECT_GE(static_cast<double>(better), 0.6 * static_cast<double>(compared));
}

TEST(Synth, CorpusSweepRebuildsTheIndex) {
  SynthConfig cfg = small_config();
  cfg.frames = 2;
  cfg.sweep = SweepSpec{"corpus_size", {50, 100}};
  const auto points = run_experiment(cfg);
  ASSERT_EQ(points.size(), 2u);
  EXPECT_LE(points[0].corpus_poses, 50u);
  EXPECT_GT(points[1].corpus_poses, points[0].corpus_poses);
}

}  // namespace
}  // namespace poselift
