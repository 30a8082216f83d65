#include "cli.hpp"

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poselift/camera.hpp"
#include "poselift/error.hpp"
#include "poselift/eval.hpp"
#include "poselift/index.hpp"
#include "poselift/normalize.hpp"
#include "poselift/pose_file.hpp"
#include "poselift/reconstruct.hpp"
#include "poselift/serialize.hpp"
#include "poselift/skeleton.hpp"
#include "poselift/synth.hpp"

namespace poselift {

namespace {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
    case ErrorCode::kParse:
    case ErrorCode::kUnitMissing:
      return kExitIo;
    default:
      return kExitPipeline;
  }
}

void report_error(std::ostream& err, std::string_view code, int exit, const std::string& message) {
  err << Json{{"error", code}, {"exit", exit}, {"message", message}}.dump() << "\n";
}

// Writes to `path`, or to `out` when the path is empty or "-".
void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::vector<std::string> split_names(const std::string& list) {
  std::vector<std::string> names;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) names.push_back(item);
  }
  return names;
}

// Columns of `skeleton` that carry the index's descriptor joints, by name.
std::vector<Eigen::Index> descriptor_columns(const PoseIndex& index, const SkeletonSpec& skeleton) {
  std::vector<Eigen::Index> cols;
  for (std::size_t j : index.descriptor_joints()) {
    const std::string& name = index.skeleton().joints()[j];
    const auto found = skeleton.find(name);
    if (!found) {
      throw Error(ErrorCode::kSkeletonMismatch,
                  "2D pose file has no joint '" + name + "' required by the index");
    }
    cols.push_back(static_cast<Eigen::Index>(*found));
  }
  return cols;
}

std::vector<Pose2D> observations(const PoseIndex& index, const PoseFile& file) {
  if (file.dimensionality != 2) {
    throw Error(ErrorCode::kInvalidArgument, "expected a 2D pose file");
  }
  const auto cols = descriptor_columns(index, file.skeleton);
  std::vector<Pose2D> out;
  out.reserve(file.frames.size());
  for (const auto& frame : file.frames) {
    Pose2D p;
    p.joints.resize(2, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) {
      p.joints.col(static_cast<Eigen::Index>(i)) = frame.col(cols[i]);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<NormalizedPose3D> normalized_corpus(const PoseFile& file) {
  if (file.dimensionality != 3) throw Error(ErrorCode::kInvalidArgument, "expected a 3D pose file");
  std::vector<NormalizedPose3D> out;
  out.reserve(file.frames.size());
  for (const auto& pose : file.poses_3d()) out.push_back(normalize_pose_3d(pose, file.skeleton));
  return out;
}

std::vector<RigidTransform> read_cameras(const std::string& path, std::size_t frames) {
  const Json doc = read_json_file(path);
  std::vector<RigidTransform> cameras;
  if (doc.is_array()) {
    for (const auto& c : doc) cameras.push_back(transform_from_json(c));
    if (cameras.size() != frames) {
      throw Error(ErrorCode::kInvalidArgument,
                  "camera file has " + std::to_string(cameras.size()) + " transforms for " +
                      std::to_string(frames) + " frames");
    }
  } else {
    cameras.assign(frames, transform_from_json(doc));
  }
  return cameras;
}

// ---------------------------------------------------------------------------

struct BuildIndexArgs {
  std::string poses;
  std::string output;
  double dedup_mm = kDefaultDedupThresholdMm;
  std::string rig = "grid";
  std::string descriptor_joints;
  std::size_t leaf_size = DescriptorTree::kDefaultLeafSize;
};

int run_build_index(const BuildIndexArgs& a, std::ostream& out) {
  const PoseFile file = read_pose_file(a.poses);
  const auto corpus = normalized_corpus(file);
  const std::vector<VirtualCamera> rig =
      a.rig == "grid" ? default_camera_rig() : rig_from_json(read_json_file(a.rig));

  PoseIndex::Options options;
  options.dedup_threshold_mm = a.dedup_mm;
  options.leaf_size = a.leaf_size;
  if (!a.descriptor_joints.empty()) {
    options.descriptor_joints = file.skeleton.indices_of(split_names(a.descriptor_joints));
  }
  const PoseIndex index = PoseIndex::build(file.skeleton, corpus, rig, options);
  index.save(a.output);
  out << Json{{"input_poses", corpus.size()},
              {"poses", index.pose_count()},
              {"cameras", index.camera_count()},
              {"descriptors", index.descriptor_count()},
              {"dedup_mm", index.dedup_threshold_mm()}}
             .dump()
      << "\n";
  return kExitOk;
}

struct QueryArgs {
  std::string index;
  std::string poses;
  std::string output;
  std::size_t k = kDefaultNeighbors;
  bool with_poses = false;
};

int run_query(const QueryArgs& a, std::ostream& out) {
  const PoseIndex index = PoseIndex::load(a.index);
  const auto targets = observations(index, read_pose_file(a.poses));
  Json frames = Json::array();
  for (std::size_t f = 0; f < targets.size(); ++f) {
    const RetrievalResult r = index.knn(normalize_pose_2d(targets[f]), a.k);
    frames.push_back({{"frame", f}, {"neighbors", to_json(r, a.with_poses)}});
  }
  const Json doc = {{"format", "poselift-neighbors"},
                    {"version", 1},
                    {"skeleton", index.skeleton().name()},
                    {"k", a.k},
                    {"frames", frames}};
  emit(out, a.output, dump(doc));
  return kExitOk;
}

struct ReconstructArgs {
  std::string index;
  std::string poses;
  std::string intrinsics;
  std::string output;
  std::string gt_camera;
  double alpha = kDefaultAlpha;
  double pca_var = kDefaultVarianceThreshold;
  std::size_t k = kDefaultNeighbors;
};

int run_reconstruct(const ReconstructArgs& a, std::ostream& out, std::ostream& err) {
  const PoseIndex index = PoseIndex::load(a.index);
  const Intrinsics intrinsics = intrinsics_from_json(read_json_file(a.intrinsics));
  const PoseFile file = read_pose_file(a.poses);
  const auto targets = observations(index, file);
  std::optional<std::vector<RigidTransform>> cameras;
  if (!a.gt_camera.empty()) cameras = read_cameras(a.gt_camera, targets.size());

  ReconstructionOptions options;
  options.alpha = a.alpha;
  options.variance_threshold = a.pca_var;
  options.joints = index.descriptor_joints();

  Json frames = Json::array();
  std::size_t failed = 0;
  for (std::size_t f = 0; f < targets.size(); ++f) {
    Json frame = {{"frame", f}};
    try {
      const RetrievalResult neighbors = index.knn(normalize_pose_2d(targets[f]), a.k);
      RigidTransform camera;
      if (cameras) {
        camera = (*cameras)[f];
      } else {
        const CameraEstimate est = estimate_projection(neighbors, targets[f], intrinsics, index.rig(),
                                                       std::nullopt, index.descriptor_joints());
        camera = est.transform;
        frame["camera_objective"] = est.objective;
      }
      const ReconstructionResult result =
          reconstruct(neighbors, targets[f], camera, intrinsics, options);
      frame["ok"] = true;
      frame["result"] = to_json(result);
    } catch (const Error& e) {
      ++failed;
      frame["ok"] = false;
      frame["error"] = std::string(to_string(e.code()));
      frame["message"] = e.what();
    }
    frames.push_back(std::move(frame));
  }

  const Json doc = {{"format", "poselift-reconstruction"},
                    {"version", 1},
                    {"skeleton", to_json(index.skeleton())},
                    {"parameters",
                     {{"alpha", a.alpha},
                      {"pca_var", a.pca_var},
                      {"k", a.k},
                      {"camera", cameras ? "given" : "estimated"},
                      {"intrinsics", to_json(intrinsics)}}},
                    {"failed", failed},
                    {"frames", frames}};
  emit(out, a.output, dump(doc));
  if (failed > 0) {
    report_error(err, "frames_failed", kExitPipeline,
                 std::to_string(failed) + " of " + std::to_string(targets.size()) +
                     " frames failed");
    return kExitPipeline;
  }
  return kExitOk;
}

struct EvaluateArgs {
  std::string result;
  std::string truth;
  std::string protocol = "rigid";
  std::string output;
  std::string table;
};

Points3 points_from_json(const Json& rows) {
  Points3 p(3, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (std::size_t c = 0; c < 3; ++c) {
      p(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = rows.at(j).at(c).get<double>();
    }
  }
  return p;
}

int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const Protocol protocol = protocol_from_string(a.protocol);
  const Json doc = read_json_file(a.result);
  SkeletonSpec est_skeleton = SkeletonSpec::h36m14();
  Json frames;
  try {
    if (doc.at("format") != "poselift-reconstruction") {
      throw Error(ErrorCode::kParse, a.result + ": not a reconstruction result");
    }
    est_skeleton = skeleton_from_json(doc.at("skeleton"));
    frames = doc.at("frames");
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, a.result + ": " + e.what());
  }

  const PoseFile truth = read_pose_file(a.truth);
  if (truth.dimensionality != 3) throw Error(ErrorCode::kInvalidArgument, "expected a 3D pose file");
  if (truth.frames.size() != frames.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "result has " + std::to_string(frames.size()) + " frames, ground truth has " +
                    std::to_string(truth.frames.size()));
  }
  const auto pairs = common_joints(est_skeleton, truth.skeleton);
  if (pairs.size() < 3) {
    throw Error(ErrorCode::kSkeletonMismatch, "fewer than three joints shared with the ground truth");
  }
  std::optional<std::size_t> root;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].source == est_skeleton.root_index()) root = i;
  }
  if (protocol == Protocol::kRootCentered && !root) {
    throw Error(ErrorCode::kSkeletonMismatch, "ground truth lacks the root joint");
  }

  bool labelled = false;
  for (const auto& l : truth.labels) labelled = labelled || !l.activity.empty();

  std::vector<double> errors;
  std::vector<std::string> keys;
  std::size_t failed = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const Json& frame = frames[f];
    if (!frame.value("ok", false)) {
      ++failed;
      continue;
    }
    const char* field =
        protocol == Protocol::kRootCentered ? "pose_camera_mm" : "pose_normalized_mm";
    Points3 est_full;
    try {
      est_full = points_from_json(frame.at("result").at(field));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, a.result + ": frame " + std::to_string(f) + ": " + e.what());
    }
    Points3 est(3, static_cast<Eigen::Index>(pairs.size()));
    Points3 gt(3, static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      est.col(static_cast<Eigen::Index>(i)) = est_full.col(static_cast<Eigen::Index>(pairs[i].source));
      gt.col(static_cast<Eigen::Index>(i)) = truth.frames[f].col(static_cast<Eigen::Index>(pairs[i].target));
    }
    errors.push_back(protocol == Protocol::kRootCentered ? pose_error_root_centered(est, gt, *root)
                                                         : pose_error_rigid(est, gt));
    if (labelled) keys.push_back(truth.labels[f].activity);
  }
  EvalReport report = aggregate(errors, keys, protocol);
  report.failed = failed;
  emit(out, a.output, dump(to_json(report)));
  if (!a.table.empty()) emit(out, a.table, format_report_table(report));
  return kExitOk;
}

struct RetargetArgs {
  std::string source;
  std::string target;
  std::string output;
  double pair_mm = 20.0;
};

int run_retarget(const RetargetArgs& a, std::ostream& out) {
  const PoseFile src = read_pose_file(a.source);
  const PoseFile tgt = read_pose_file(a.target);
  const auto src_poses = normalized_corpus(src);
  const auto tgt_poses = normalized_corpus(tgt);
  const auto correspondence = common_joints(src.skeleton, tgt.skeleton);
  const auto pairs = select_pairs(src_poses, tgt_poses, a.pair_mm, correspondence);
  std::vector<Points3> xs, ys;
  for (const auto& p : pairs) {
    xs.push_back(src_poses[p.source_index].joints);
    ys.push_back(tgt_poses[p.target_index].joints);
  }
  const RetargetModel model = fit_retarget(src.skeleton, tgt.skeleton, xs, ys);
  emit(out, a.output, dump(to_json(model)));
  return kExitOk;
}

struct SynthArgs {
  std::string config;
  std::string output;
  std::string table;
  std::string export_dir;
  std::optional<std::uint64_t> seed;
};

std::string sweep_table(const std::vector<SweepPoint>& points) {
  std::ostringstream os;
  for (const auto& p : points) {
    if (!p.parameter.empty()) os << p.parameter << " = " << Json(p.value).dump() << "\n";
    os << format_report_table(p.report) << "\n";
  }
  return os.str();
}

// Writes the frames of `cfg` as files the other subcommands consume.
void export_dataset(const SynthConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  const SkeletonSpec skeleton = SkeletonSpec::builtin(cfg.skeleton);
  const auto corpus = generate_corpus(cfg);
  write_pose_file(dir / "corpus.csv", PoseFile::from_poses(skeleton, corpus));

  std::vector<NormalizedPose3D> normalized;
  for (const auto& p : corpus) normalized.push_back(normalize_pose_3d(p, skeleton));
  const PoseIndex index =
      PoseIndex::build(skeleton, normalized, default_camera_rig(), cfg.pipeline.dedup_mm);

  std::vector<Pose2D> observed;
  std::vector<Pose3D> truth;
  Json cameras = Json::array();
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    const FrameSetup setup = make_frame(cfg, index, f);
    observed.push_back(setup.observation);
    truth.push_back(Pose3D{setup.truth.joints});
    cameras.push_back(to_json(setup.camera));
  }
  write_pose_file(dir / "observations.csv", PoseFile::from_poses(skeleton, observed));
  write_pose_file(dir / "truth.csv", PoseFile::from_poses(skeleton, truth));
  write_text_file(dir / "cameras.json", dump(cameras));
  write_text_file(dir / "intrinsics.json", dump(to_json(cfg.intrinsics)));
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  SynthConfig cfg = synth_config_from_json(read_json_file(a.config));
  if (a.seed) cfg.seed = *a.seed;
  if (!a.export_dir.empty()) export_dataset(cfg, a.export_dir);
  const auto points = run_experiment(cfg);
  Json list = Json::array();
  for (const auto& p : points) list.push_back(to_json(p));
  const Json doc = {{"format", "poselift-synth"}, {"version", 1}, {"config", to_json(cfg)},
                    {"points", list}};
  emit(out, a.output, dump(doc));
  if (!a.table.empty()) emit(out, a.table, sweep_table(points));
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lift 2D human poses to 3D by retrieving and fitting motion-capture poses.", "poselift"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  BuildIndexArgs bi;
  auto* build = app.add_subcommand("build-index", "Build a retrieval index from a 3D pose file");
  build->add_option("poses", bi.poses, "3D pose CSV (sidecar JSON alongside)")->required();
  build->add_option("-o,--output", bi.output, "Index file to write")->required();
  build->add_option("--dedup-mm", bi.dedup_mm, "Minimum mean per-joint distance between kept poses")
      ->check(CLI::NonNegativeNumber);
  build->add_option("--rig", bi.rig, "Virtual cameras: 'grid' (24 azimuths x 6 elevations) or a rig JSON");
  build->add_option("--descriptor-joints", bi.descriptor_joints,
                    "Comma-separated joints used for retrieval (default: all)");
  build->add_option("--leaf-size", bi.leaf_size, "kd-tree leaf size")->check(CLI::PositiveNumber);

  QueryArgs q;
  auto* query = app.add_subcommand("query", "Retrieve nearest corpus views for 2D poses");
  query->add_option("index", q.index, "Index file")->required();
  query->add_option("poses", q.poses, "2D pose CSV")->required();
  query->add_option("--k", q.k, "Neighbors per frame")->check(CLI::PositiveNumber);
  query->add_option("-o,--output", q.output, "Neighbor dump (default: stdout)");
  query->add_flag("--with-poses", q.with_poses, "Include neighbor 3D poses");

  ReconstructArgs r;
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct 3D poses from 2D poses");
  rec->add_option("index", r.index, "Index file")->required();
  rec->add_option("poses", r.poses, "2D pose CSV (pixels)")->required();
  rec->add_option("--intrinsics", r.intrinsics, "Camera intrinsics JSON {fx, fy, cx, cy}")->required();
  rec->add_option("--alpha", r.alpha, "Weight of the retrieval energy")->check(CLI::NonNegativeNumber);
  rec->add_option("--pca-var", r.pca_var, "Variance fraction kept by the pose subspace")
      ->check(CLI::Validator(
          [](const std::string& v) {
            double x = 0.0;
            return CLI::detail::lexical_cast(v, x) && x > 0.0 && x <= 1.0 ? std::string()
                                                                          : "must lie in (0, 1]";
          },
          "(0, 1]"));
  rec->add_option("--k", r.k, "Neighbors per frame")->check(CLI::PositiveNumber);
  rec->add_option("--gt-camera", r.gt_camera,
                  "Known camera transform JSON (one object, or an array per frame); skips estimation");
  rec->add_option("-o,--output", r.output, "Result JSON (default: stdout)");

  EvaluateArgs ev;
  auto* eval = app.add_subcommand("evaluate", "Score reconstructions against ground-truth 3D poses");
  eval->add_option("result", ev.result, "Result JSON from reconstruct")->required();
  eval->add_option("truth", ev.truth, "Ground-truth 3D pose CSV")->required();
  eval->add_option("--protocol", ev.protocol, "rigid (Procrustes aligned) or root (root centered)")
      ->check(CLI::IsMember({"rigid", "root"}));
  eval->add_option("-o,--output", ev.output, "Report JSON (default: stdout)");
  eval->add_option("--table", ev.table, "Also write a plain-text table here ('-' for stdout)");

  RetargetArgs rt;
  auto* ret = app.add_subcommand("retarget", "Fit a per-joint affine map between two skeletons");
  ret->add_option("source", rt.source, "Source-skeleton 3D pose CSV")->required();
  ret->add_option("target", rt.target, "Target-skeleton 3D pose CSV")->required();
  ret->add_option("--pair-mm", rt.pair_mm, "Pairing threshold on shared joints")
      ->check(CLI::NonNegativeNumber);
  ret->add_option("-o,--output", rt.output, "Model JSON (default: stdout)");

  SynthArgs sy;
  auto* syn = app.add_subcommand("synth", "Run a synthetic recovery experiment");
  syn->add_option("config", sy.config, "Experiment config JSON")->required();
  syn->add_option("--seed", sy.seed, "Override the config seed");
  syn->add_option("-o,--output", sy.output, "Report JSON (default: stdout)");
  syn->add_option("--table", sy.table, "Also write plain-text tables here ('-' for stdout)");
  syn->add_option("--export", sy.export_dir,
                  "Also write corpus, observations, truth, cameras and intrinsics to this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", kExitUsage, e.what());
    return kExitUsage;
  }

  try {
    if (*build) return run_build_index(bi, out);
    if (*query) return run_query(q, out);
    if (*rec) return run_reconstruct(r, out, err);
    if (*eval) return run_evaluate(ev, out);
    if (*ret) return run_retarget(rt, out);
    if (*syn) return run_synth(sy, out);
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    report_error(err, to_string(e.code()), code, e.what());
    return code;
  } catch (const fs::filesystem_error& e) {
    report_error(err, "io", kExitIo, e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    report_error(err, "internal", kExitPipeline, e.what());
    return kExitPipeline;
  }
  return kExitUsage;
}

}  // namespace poselift
