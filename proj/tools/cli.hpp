#pragma once

#include <iosfwd>

namespace sumformer::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kVerificationFailed = 3,
  kDiverged = 4,
};

// Entry point of the `sumformer` binary: verify | train | sweep | bench.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sumformer::cli
