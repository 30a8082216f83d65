#include "poselift/serialize.hpp"

#include <fstream>
#include <sstream>

#include "poselift/error.hpp"

namespace poselift {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string(what) + ": " + e.what());
  }
}

Json points_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    Json row = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json matrix_rows(const Eigen::MatrixXd& m) {
  Json values = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
  }
  return values;
}

std::array<AngleRange, 3> ranges_from_json(const Json& j) {
  std::array<AngleRange, 3> out{};
  if (j.size() != 3) throw Error(ErrorCode::kParse, "angle ranges need three [min, max] pairs");
  for (std::size_t a = 0; a < 3; ++a) out[a] = {j.at(a).at(0).get<double>(), j.at(a).at(1).get<double>()};
  return out;
}

}  // namespace

Json to_json(const SkeletonSpec& skeleton) {
  return {{"name", skeleton.name()}, {"joints", skeleton.joints()}, {"root", skeleton.root_index()}};
}

SkeletonSpec skeleton_from_json(const Json& j) {
  return guarded("skeleton", [&] {
    return SkeletonSpec(j.at("name").get<std::string>(),
                        j.at("joints").get<std::vector<std::string>>(),
                        j.at("root").get<std::size_t>());
  });
}

Json to_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}};
}

Intrinsics intrinsics_from_json(const Json& j) {
  Intrinsics k = guarded("intrinsics", [&] {
    return Intrinsics{j.at("fx").get<double>(), j.at("fy").get<double>(),
                      j.at("cx").get<double>(), j.at("cy").get<double>()};
  });
  k.validate();
  return k;
}

Json to_json(const RigidTransform& t) {
  return {{"rotation", matrix_rows(t.rotation)},
          {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

RigidTransform transform_from_json(const Json& j) {
  RigidTransform t = guarded("transform", [&] {
    RigidTransform out;
    const auto& r = j.at("rotation");
    if (r.size() != 9) throw Error(ErrorCode::kParse, "transform: rotation needs 9 values");
    for (int i = 0; i < 9; ++i) out.rotation(i / 3, i % 3) = r.at(static_cast<std::size_t>(i)).get<double>();
    const auto& tr = j.at("translation");
    if (tr.size() != 3) throw Error(ErrorCode::kParse, "transform: translation needs 3 values");
    for (int i = 0; i < 3; ++i) out.translation(i) = tr.at(static_cast<std::size_t>(i)).get<double>();
    return out;
  });
  if (!t.is_valid(1e-6)) {
    throw Error(ErrorCode::kInvalidArgument, "transform: rotation is not orthonormal");
  }
  return t;
}

Json rig_to_json(const std::vector<VirtualCamera>& rig) {
  Json out = Json::array();
  for (std::size_t i = 0; i < rig.size(); ++i) {
    out.push_back({{"id", i}, {"azimuth_deg", rig[i].azimuth_deg},
                   {"elevation_deg", rig[i].elevation_deg}});
  }
  return out;
}

std::vector<VirtualCamera> rig_from_json(const Json& j) {
  return guarded("rig", [&] {
    std::vector<VirtualCamera> rig;
    for (const auto& c : j) {
      rig.push_back({c.at("azimuth_deg").get<double>(), c.at("elevation_deg").get<double>()});
    }
    if (rig.empty()) throw Error(ErrorCode::kParse, "rig: no cameras");
    return rig;
  });
}

Json to_json(const RetargetModel& model) {
  Json coeffs = Json::array();
  for (const auto& m : model.coefficients) coeffs.push_back(matrix_rows(m));
  return {{"format", "poselift-retarget"},
          {"version", 1},
          {"source_skeleton", model.source_skeleton},
          {"source_joints", model.source_joints},
          {"target_skeleton", model.target_skeleton},
          {"target_joints", model.target_joints},
          {"coefficients", coeffs},
          {"pair_count", model.pair_count},
          {"rank", model.rank},
          {"residual_rms_mm", model.residual_rms_mm}};
}

RetargetModel retarget_from_json(const Json& j) {
  return guarded("retarget model", [&] {
    if (j.at("format") != "poselift-retarget" || j.at("version") != 1) {
      throw Error(ErrorCode::kParse, "retarget model: unsupported format or version");
    }
    RetargetModel model;
    model.source_skeleton = j.at("source_skeleton").get<std::string>();
    model.source_joints = j.at("source_joints").get<std::size_t>();
    model.target_skeleton = j.at("target_skeleton").get<std::string>();
    model.target_joints = j.at("target_joints").get<std::size_t>();
    model.pair_count = j.at("pair_count").get<std::size_t>();
    model.rank = j.at("rank").get<std::size_t>();
    model.residual_rms_mm = j.at("residual_rms_mm").get<double>();
    const auto cols = static_cast<Eigen::Index>(3 * model.source_joints + 1);
    const auto& coeffs = j.at("coefficients");
    if (coeffs.size() != model.target_joints) {
      throw Error(ErrorCode::kParse, "retarget model: one coefficient matrix per target joint");
    }
    for (const auto& c : coeffs) {
      if (static_cast<Eigen::Index>(c.size()) != 3 * cols) {
        throw Error(ErrorCode::kParse, "retarget model: coefficient matrix has wrong size");
      }
      Eigen::Matrix<double, 3, Eigen::Dynamic> m(3, cols);
      for (Eigen::Index r = 0; r < 3; ++r) {
        for (Eigen::Index k = 0; k < cols; ++k) {
          m(r, k) = c.at(static_cast<std::size_t>(r * cols + k)).get<double>();
        }
      }
      model.coefficients.push_back(std::move(m));
    }
    return model;
  });
}

Json to_json(const RetrievalResult& neighbors, bool include_poses) {
  Json out = Json::array();
  for (const auto& n : neighbors.neighbors) {
    Json e = {{"pose_id", n.pose_id}, {"camera_id", n.camera_id}, {"distance", n.distance}};
    if (include_poses) e["pose_mm"] = points_to_json(n.pose.joints);
    out.push_back(std::move(e));
  }
  return out;
}

Json to_json(const EnergyBreakdown& e) {
  return {{"total", e.total}, {"projection", e.projection}, {"retrieval", e.retrieval},
          {"alpha", e.alpha}};
}

Json to_json(const ReconstructionResult& r) {
  return {{"pose_normalized_mm", points_to_json(r.pose.joints)},
          {"pose_camera_mm", points_to_json(r.camera_space_pose())},
          {"camera", to_json(r.camera)},
          {"energy", to_json(r.energy)},
          {"pca_dimension", r.pca_dimension},
          {"explained_fraction", r.explained_fraction},
          {"degenerate_neighbors", r.degenerate_neighbors},
          {"iterations", r.iterations},
          {"neighbors", to_json(r.neighbors)}};
}

Json to_json(const EvalReport& report) {
  Json groups = Json::object();
  for (const auto& [key, s] : report.groups) {
    groups[key] = {{"count", s.count}, {"mean_mm", s.mean}, {"median_mm", s.median}};
  }
  Json curve = Json::array();
  for (const auto& c : report.curve) curve.push_back({c.threshold_mm, c.fraction});
  Json out = {{"protocol", to_string(report.protocol)},
              {"errors_mm", report.errors},
              {"overall",
               {{"count", report.overall.count},
                {"mean_mm", report.overall.mean},
                {"median_mm", report.overall.median}}},
              {"groups", groups},
              {"curve", curve},
              {"failed", report.failed}};
  if (!report.group_keys.empty()) out["group_keys"] = report.group_keys;
  return out;
}

Json to_json(const SynthConfig& cfg) {
  Json ranges = Json::object();
  for (const auto& [joint, r] : cfg.angle_ranges_deg) {
    ranges[joint] = {{r[0].first, r[0].second}, {r[1].first, r[1].second}, {r[2].first, r[2].second}};
  }
  Json out = {{"seed", cfg.seed},
              {"corpus_size", cfg.corpus_size},
              {"skeleton", cfg.skeleton},
              {"limb_lengths_mm", cfg.limb_lengths_mm},
              {"angle_ranges_deg", ranges},
              {"angle_scale", cfg.angle_scale},
              {"root_tilt_deg", cfg.root_tilt_deg},
              {"frames", cfg.frames},
              {"noise_px", cfg.noise_px},
              {"true_pose_in_corpus", cfg.true_pose_in_corpus},
              {"use_gt_camera", cfg.use_gt_camera},
              {"intrinsics", to_json(cfg.intrinsics)},
              {"camera", to_json(cfg.camera)},
              {"yaw_jitter_deg", cfg.yaw_jitter_deg},
              {"yaw_step_deg", cfg.yaw_step_deg},
              {"pipeline",
               {{"k", cfg.pipeline.k},
                {"alpha", cfg.pipeline.alpha},
                {"variance_threshold", cfg.pipeline.variance_threshold},
                {"dedup_mm", cfg.pipeline.dedup_mm}}}};
  if (cfg.sweep) out["sweep"] = {{"parameter", cfg.sweep->parameter}, {"values", cfg.sweep->values}};
  return out;
}

SynthConfig synth_config_from_json(const Json& j) {
  SynthConfig cfg = guarded("synth config", [&] {
    SynthConfig c;
    c.seed = j.value("seed", c.seed);
    c.corpus_size = j.value("corpus_size", c.corpus_size);
    c.skeleton = j.value("skeleton", c.skeleton);
    if (j.contains("limb_lengths_mm")) {
      c.limb_lengths_mm = j.at("limb_lengths_mm").get<std::map<std::string, double>>();
    }
    if (j.contains("angle_ranges_deg")) {
      for (const auto& [joint, r] : j.at("angle_ranges_deg").items()) {
        c.angle_ranges_deg[joint] = ranges_from_json(r);
      }
    }
    c.angle_scale = j.value("angle_scale", c.angle_scale);
    c.root_tilt_deg = j.value("root_tilt_deg", c.root_tilt_deg);
    c.frames = j.value("frames", c.frames);
    c.noise_px = j.value("noise_px", c.noise_px);
    c.true_pose_in_corpus = j.value("true_pose_in_corpus", c.true_pose_in_corpus);
    c.use_gt_camera = j.value("use_gt_camera", c.use_gt_camera);
    if (j.contains("intrinsics")) c.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    if (j.contains("camera")) c.camera = transform_from_json(j.at("camera"));
    c.yaw_jitter_deg = j.value("yaw_jitter_deg", c.yaw_jitter_deg);
    c.yaw_step_deg = j.value("yaw_step_deg", c.yaw_step_deg);
    if (j.contains("pipeline")) {
      const auto& p = j.at("pipeline");
      c.pipeline.k = p.value("k", c.pipeline.k);
      c.pipeline.alpha = p.value("alpha", c.pipeline.alpha);
      c.pipeline.variance_threshold = p.value("variance_threshold", c.pipeline.variance_threshold);
      c.pipeline.dedup_mm = p.value("dedup_mm", c.pipeline.dedup_mm);
    }
    if (j.contains("sweep")) {
      c.sweep = SweepSpec{j.at("sweep").at("parameter").get<std::string>(),
                          j.at("sweep").at("values").get<std::vector<double>>()};
    }
    return c;
  });
  cfg.validate();
  return cfg;
}

Json to_json(const FrameRecord& f) {
  Json out = {{"frame", f.frame}, {"ok", f.ok}};
  if (!f.ok) {
    out["failure"] = f.failure;
    return out;
  }
  out["error_mm"] = f.error_mm;
  out["projection_energy"] = f.projection_energy;
  out["retrieval_energy"] = f.retrieval_energy;
  out["camera_objective"] = f.camera_objective;
  out["true_pose_id"] = f.true_pose_id;
  out["top_neighbor"] = {{"pose_id", f.top_pose_id}, {"camera_id", f.top_camera_id},
                         {"distance", f.top_distance}};
  out["pca_dimension"] = f.pca_dimension;
  return out;
}

Json to_json(const SweepPoint& p) {
  Json frames = Json::array();
  for (const auto& f : p.frames) frames.push_back(to_json(f));
  Json out = {{"pipeline",
               {{"k", p.pipeline.k},
                {"alpha", p.pipeline.alpha},
                {"variance_threshold", p.pipeline.variance_threshold},
                {"dedup_mm", p.pipeline.dedup_mm}}},
              {"corpus_poses", p.corpus_poses},
              {"report", to_json(p.report)},
              {"frames", frames}};
  if (!p.parameter.empty()) out["sweep"] = {{"parameter", p.parameter}, {"value", p.value}};
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace poselift
