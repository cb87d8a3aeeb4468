#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epsinas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (without the program name). Never throws;
/// failures are reported on `err` and through the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace epsinas::cli
