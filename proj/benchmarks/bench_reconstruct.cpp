#include <vector>

#include <benchmark/benchmark.h>

#include "poselift/camera.hpp"
#include "poselift/index.hpp"
#include "poselift/normalize.hpp"
#include "poselift/reconstruct.hpp"
#include "poselift/synth.hpp"

namespace {

using namespace poselift;

struct Frame {
  Pose2D observed;
  RetrievalResult neighbors;
  RigidTransform camera;
};

struct Fixture {
  SynthConfig cfg;
  std::vector<std::size_t> joints;
  std::vector<Frame> frames;
};

// Pinned synthetic benchmark: seed 1, 2000 poses, 20 frames, estimated camera.
const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    out.cfg.seed = 1;
    out.cfg.corpus_size = 2000;
    out.cfg.frames = 20;
    const auto skeleton = SkeletonSpec::builtin(out.cfg.skeleton);
    std::vector<NormalizedPose3D> poses;
    for (const auto& p : generate_corpus(out.cfg)) poses.push_back(normalize_pose_3d(p, skeleton));
    const auto index = PoseIndex::build(skeleton, poses, default_camera_rig());
    out.joints = index.descriptor_joints();
    for (std::size_t i = 0; i < out.cfg.frames; ++i) {
      const FrameSetup setup = make_frame(out.cfg, index, i);
      Frame frame;
      frame.observed.joints.resize(2, static_cast<Eigen::Index>(out.joints.size()));
      for (std::size_t j = 0; j < out.joints.size(); ++j) {
        frame.observed.joints.col(static_cast<Eigen::Index>(j)) =
            setup.observation.joints.col(static_cast<Eigen::Index>(out.joints[j]));
      }
      frame.neighbors = index.knn(normalize_pose_2d(frame.observed), out.cfg.pipeline.k);
      frame.camera = estimate_projection(frame.neighbors, frame.observed, out.cfg.intrinsics,
                                         index.rig(), std::nullopt, out.joints)
                         .transform;
      out.frames.push_back(std::move(frame));
    }
    return out;
  }();
  return f;
}

// range(0) = variance threshold in percent.
void BM_Reconstruct(benchmark::State& state) {
  const Fixture& f = fixture();
  ReconstructionOptions options;
  options.variance_threshold = static_cast<double>(state.range(0)) / 100.0;
  options.joints = f.joints;
  std::size_t i = 0;
  for (auto _ : state) {
    const Frame& frame = f.frames[i++ % f.frames.size()];
    benchmark::DoNotOptimize(
        reconstruct(frame.neighbors, frame.observed, frame.camera, f.cfg.intrinsics, options));
  }
}
BENCHMARK(BM_Reconstruct)->Arg(80)->Arg(90)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_EstimateCamera(benchmark::State& state) {
  const Fixture& f = fixture();
  const auto rig = default_camera_rig();
  std::size_t i = 0;
  for (auto _ : state) {
    const Frame& frame = f.frames[i++ % f.frames.size()];
    benchmark::DoNotOptimize(estimate_projection(frame.neighbors, frame.observed, f.cfg.intrinsics,
                                                 rig, std::nullopt, f.joints));
  }
}
BENCHMARK(BM_EstimateCamera)->Unit(benchmark::kMicrosecond);

void BM_FitPca(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_pca(f.frames[0].neighbors, 0.8));
  }
}
BENCHMARK(BM_FitPca)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
