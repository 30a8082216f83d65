#pragma once

#include <ostream>

namespace poselift {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitPipeline = 3;

/// Entry point of the `poselift` tool. Failures print one JSON line
/// {"error": code, "exit": n, "message": text} to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace poselift
