// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zsharp::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDivergence = 3,
  kPartialFailure = 4,
  kBoundViolated = 5,
};

/// Runs one command line (args[0] is the program name). Normal output goes
/// to `out`, diagnostics to `err`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zsharp::cli
