#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poselift {

enum class ErrorCode {
  kInvalidArgument,
  kJointCountMismatch,
  kSkeletonMismatch,
  kDegenerateHips,
  kDegenerateExtent,
  kDegenerateConfiguration,
  kEmptyCorpus,
  kEmptyAfterDedup,
  kRankDeficient,
  kZeroVariance,
  kBehindCamera,
  kDivergence,
  kInvalidRange,
  kParse,
  kUnitMissing,
  kIo,
};

/// Stable lowercase identifier used in machine-readable error output.
std::string_view to_string(ErrorCode code);

/// All failures raised by the library carry a code so callers (and the CLI)
/// can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure with a 1-based source position. `frame` is the 0-based frame
/// index when the failure is inside a frame row, otherwise -1.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, long line, long column, long frame = -1);

  long line() const noexcept { return line_; }
  long column() const noexcept { return column_; }
  long frame() const noexcept { return frame_; }

 private:
  long line_;
  long column_;
  long frame_;
};

}  // namespace poselift
