// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace road {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Deterministic invariant suite behind `road-cli verify`. Uses no timings, so
/// the same seed always yields the same results. Exceptions inside a check are
/// reported as a failure of that check.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed);

}  // namespace road
