// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace road::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailedChecks = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. args excludes the program name. Failed checks print a
/// one-line JSON object {"failures": [...]} on `out` and return 1; usage errors
/// return 2.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace road::cli
