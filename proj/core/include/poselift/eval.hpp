#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poselift/camera.hpp"
#include "poselift/types.hpp"

namespace poselift {

struct Alignment {
  RigidTransform transform;  // maps est onto gt
  Points3 aligned;
};

/// Least-squares rotation + translation (no scale, no reflection) taking
/// `est` onto `gt`. Needs at least three joints not all coincident.
Alignment procrustes_align(const Points3& est, const Points3& gt);

/// Mean per-joint Euclidean distance after procrustes_align.
double pose_error_rigid(const Points3& est, const Points3& gt);

/// Mean per-joint Euclidean distance after subtracting each pose's root
/// joint; rotation is not compensated.
double pose_error_root_centered(const Points3& est, const Points3& gt, std::size_t root);

enum class Protocol { kRigidAligned, kRootCentered };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

struct GroupStats {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
};

struct CurvePoint {
  double threshold_mm;
  double fraction;  // share of frames with error <= threshold
};

struct EvalReport {
  Protocol protocol = Protocol::kRigidAligned;
  std::vector<double> errors;
  std::vector<std::string> group_keys;  // empty or one per error
  GroupStats overall;
  std::map<std::string, GroupStats> groups;
  std::vector<CurvePoint> curve;
  /// Frames that could not be evaluated (e.g. pipeline failures).
  std::size_t failed = 0;
};

inline constexpr double kCurveStepMm = 10.0;
inline constexpr double kCurveMaxMm = 300.0;

/// Overall and per-group mean/median plus the error-threshold curve at 10 mm
/// steps from 0 to 300 mm. `group_keys` is either empty or matches `errors`.
EvalReport aggregate(std::span<const double> errors, std::span<const std::string> group_keys,
                     Protocol protocol = Protocol::kRigidAligned);

double median(std::vector<double> values);

/// Aligned plain-text table, one row per group followed by an "All" row.
std::string format_report_table(const EvalReport& report);

}  // namespace poselift
