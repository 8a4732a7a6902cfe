#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rdd::cli {

/// Exit codes of the rdd tool.
enum ExitCode : int {
  kSuccess = 0,
  kValidationFailure = 1,  // inputs parsed but were rejected
  kUsageError = 2,         // bad flags, missing files or directories
};

/// Runs one invocation. `args` excludes the program name. Diagnostics go to
/// `err` exactly when the return value is nonzero (or --verbose is given).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rdd::cli
