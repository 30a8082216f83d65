#include "poselift/error.hpp"

namespace poselift {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kJointCountMismatch: return "joint_count_mismatch";
    case ErrorCode::kSkeletonMismatch: return "skeleton_mismatch";
    case ErrorCode::kDegenerateHips: return "degenerate_hips";
    case ErrorCode::kDegenerateExtent: return "degenerate_extent";
    case ErrorCode::kDegenerateConfiguration: return "degenerate_configuration";
    case ErrorCode::kEmptyCorpus: return "empty_corpus";
    case ErrorCode::kEmptyAfterDedup: return "empty_after_dedup";
    case ErrorCode::kRankDeficient: return "rank_deficient";
    case ErrorCode::kZeroVariance: return "zero_variance";
    case ErrorCode::kBehindCamera: return "behind_camera";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kInvalidRange: return "invalid_range";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kUnitMissing: return "unit_missing";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

namespace {

std::string with_position(const std::string& message, long line, long column, long frame) {
  std::string out = "line " + std::to_string(line) + ", column " + std::to_string(column);
  if (frame >= 0) out += ", frame " + std::to_string(frame);
  return out + ": " + message;
}

}  // namespace

ParseError::ParseError(const std::string& message, long line, long column, long frame)
    : Error(ErrorCode::kParse, with_position(message, line, column, frame)),
      line_(line),
      column_(column),
      frame_(frame) {}

}  // namespace poselift
