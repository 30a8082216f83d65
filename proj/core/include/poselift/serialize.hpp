#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poselift/camera.hpp"
#include "poselift/eval.hpp"
#include "poselift/index.hpp"
#include "poselift/reconstruct.hpp"
#include "poselift/skeleton.hpp"
#include "poselift/synth.hpp"

// JSON documents exchanged by the command-line tool. Every writer produces
// deterministic text (sorted keys, shortest round-trip doubles).
namespace poselift {

using Json = nlohmann::json;

Json to_json(const SkeletonSpec& skeleton);
SkeletonSpec skeleton_from_json(const Json& j);

/// {"fx", "fy", "cx", "cy"}
Json to_json(const Intrinsics& k);
Intrinsics intrinsics_from_json(const Json& j);

/// {"rotation": 9 values row-major, "translation": [x, y, z] mm}
Json to_json(const RigidTransform& t);
RigidTransform transform_from_json(const Json& j);

Json rig_to_json(const std::vector<VirtualCamera>& rig);
std::vector<VirtualCamera> rig_from_json(const Json& j);

/// Versioned: {"format": "poselift-retarget", "version": 1, ...}; each target
/// joint's 3 x (3J+1) coefficient matrix is stored row-major.
Json to_json(const RetargetModel& model);
RetargetModel retarget_from_json(const Json& j);

Json to_json(const RetrievalResult& neighbors, bool include_poses = false);
Json to_json(const EnergyBreakdown& e);

/// Pose in normalized space and, via the camera, in camera space.
Json to_json(const ReconstructionResult& r);

Json to_json(const EvalReport& report);

Json to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const Json& j);

Json to_json(const FrameRecord& f);
Json to_json(const SweepPoint& p);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
/// Pretty-printed with a trailing newline.
std::string dump(const Json& j);

}  // namespace poselift
