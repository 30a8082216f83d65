#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poselift/skeleton.hpp"
#include "poselift/types.hpp"

namespace poselift {

struct FrameLabel {
  std::string activity;
  std::string subject;

  friend bool operator==(const FrameLabel&, const FrameLabel&) = default;
};

/// Pose sequence stored as `<stem>.csv` (one frame per row) plus a JSON
/// sidecar `<stem>.json` carrying the skeleton, units and dimensionality.
///
/// CSV columns: activity, subject, then `<joint>_x`, `<joint>_y`[, `<joint>_z`]
/// per joint in skeleton order. Values are written with 17 significant digits
/// so a read/write cycle is lossless.
struct PoseFile {
  static constexpr int kVersion = 1;

  SkeletonSpec skeleton = SkeletonSpec::h36m14();
  int dimensionality = 3;  // 2 or 3
  std::string units = "mm";
  /// dimensionality x J per frame.
  std::vector<Eigen::MatrixXd> frames;
  std::vector<FrameLabel> labels;  // one per frame

  std::vector<Pose3D> poses_3d() const;
  std::vector<Pose2D> poses_2d() const;

  static PoseFile from_poses(const SkeletonSpec& skeleton, const std::vector<Pose3D>& poses,
                             std::vector<FrameLabel> labels = {});
  static PoseFile from_poses(const SkeletonSpec& skeleton, const std::vector<Pose2D>& poses,
                             std::vector<FrameLabel> labels = {}, std::string units = "px");
};

/// Sidecar path for a pose CSV.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

void write_pose_file(const std::filesystem::path& csv, const PoseFile& file);

/// Throws ParseError (line/column, frame index for row errors), kUnitMissing
/// for 3D files without units, kSkeletonMismatch when the columns disagree
/// with the sidecar or with `expected`.
PoseFile read_pose_file(const std::filesystem::path& csv,
                        const std::optional<SkeletonSpec>& expected = std::nullopt);

/// Canonical text of both parts (csv, sidecar), as written to disk.
std::pair<std::string, std::string> format_pose_file(const PoseFile& file);
PoseFile parse_pose_file(const std::string& csv_text, const std::string& sidecar_text,
                         const std::optional<SkeletonSpec>& expected = std::nullopt);

}  // namespace poselift
