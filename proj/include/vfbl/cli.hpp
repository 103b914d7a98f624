#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vfbl::cli {

enum ExitCode : int { kOk = 0, kVerificationFailed = 1, kConfigError = 2, kRuntimeError = 3 };

/// Runs one CLI invocation. args excludes the program name. Human-readable output goes
/// to out, diagnostics to err, and result files to the configured output directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vfbl::cli
