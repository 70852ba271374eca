#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ood {

inline constexpr const char* kToolVersion = "1.0.0";

/// Process exit codes. Stage errors map onto distinct non-zero values.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitIo = 3,
  kExitFormat = 4,
  kExitShape = 5,
  kExitData = 6,
};

/// Runs one subcommand. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ood
