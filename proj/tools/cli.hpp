#pragma once

#include <iosfwd>

namespace chmm::cli {

enum ExitCode : int { kSuccess = 0, kRuntimeFailure = 1, kUsageError = 2 };

/// Entry point for `concept-hmm <fit|generate|export|eval> [flags]`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace chmm::cli
