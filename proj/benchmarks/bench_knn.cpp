#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "poselift/index.hpp"
#include "poselift/kdtree.hpp"
#include "poselift/normalize.hpp"
#include "poselift/synth.hpp"

namespace {

using namespace poselift;

std::vector<double> random_points(std::size_t count, std::size_t joints, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> points(count * 2 * joints);
  for (auto& x : points) x = u(rng);
  return points;
}

// Raw tree query against a linear scan; range(0) = descriptor count, range(1) = k.
void BM_TreeKnn(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const std::size_t joints = 14;
  const auto points = random_points(static_cast<std::size_t>(state.range(0)), joints, rng);
  const auto tree = DescriptorTree::build(points, joints);
  const auto queries = random_points(64, joints, rng);
  std::size_t q = 0;
  for (auto _ : state) {
    const std::span<const double> query(queries.data() + (q++ % 64) * 2 * joints, 2 * joints);
    benchmark::DoNotOptimize(tree.knn(points, query, static_cast<std::size_t>(state.range(1))));
  }
}
BENCHMARK(BM_TreeKnn)->Args({10000, 1})->Args({10000, 256})->Args({288000, 256});

void BM_LinearScan(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const std::size_t joints = 14;
  const std::size_t count = static_cast<std::size_t>(state.range(0));
  const auto points = random_points(count, joints, rng);
  const auto query = random_points(1, joints, rng);
  std::vector<DescriptorTree::Match> all(count);
  for (auto _ : state) {
    for (std::size_t i = 0; i < count; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < joints; ++j) {
        sum += std::hypot(points[i * 2 * joints + 2 * j] - query[2 * j],
                          points[i * 2 * joints + 2 * j + 1] - query[2 * j + 1]);
      }
      all[i] = {sum / static_cast<double>(joints), static_cast<std::uint32_t>(i)};
    }
    std::partial_sort(all.begin(), all.begin() + 256, all.end(),
                      [](const auto& a, const auto& b) { return a.distance < b.distance; });
    benchmark::DoNotOptimize(all.data());
  }
}
BENCHMARK(BM_LinearScan)->Arg(10000)->Arg(288000);

// Full retrieval on a synthetic 2000-pose corpus (144 views each).
void BM_IndexQuery(benchmark::State& state) {
  SynthConfig cfg;
  cfg.corpus_size = 2000;
  const auto skeleton = SkeletonSpec::builtin(cfg.skeleton);
  std::vector<NormalizedPose3D> poses;
  for (const auto& p : generate_corpus(cfg)) poses.push_back(normalize_pose_3d(p, skeleton));
  const auto index = PoseIndex::build(skeleton, poses, default_camera_rig());
  const auto query = normalize_pose_2d(project_orthographic(poses[7], {40.0, 20.0}));
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.knn(query, static_cast<std::size_t>(state.range(0))));
  }
}
BENCHMARK(BM_IndexQuery)->Arg(1)->Arg(256);

void BM_IndexBuild(benchmark::State& state) {
  SynthConfig cfg;
  cfg.corpus_size = static_cast<std::size_t>(state.range(0));
  const auto skeleton = SkeletonSpec::builtin(cfg.skeleton);
  std::vector<NormalizedPose3D> poses;
  for (const auto& p : generate_corpus(cfg)) poses.push_back(normalize_pose_3d(p, skeleton));
  for (auto _ : state) {
    benchmark::DoNotOptimize(PoseIndex::build(skeleton, poses, default_camera_rig()));
  }
}
BENCHMARK(BM_IndexBuild)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
