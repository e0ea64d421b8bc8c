#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hydrosac::cli {

enum ExitCode : int {
  kSuccess = 0,
  kFailure = 1,
  kUsage = 2,
  kTrainingAborted = 3,
  kCorruptArtifact = 4,
};

/// Runs one `hydrosac` invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hydrosac::cli
