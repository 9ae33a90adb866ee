// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "road/analysis.hpp"
#include "road/serving.hpp"
#include "road/trainer.hpp"

namespace road {

// Every CSV starts with "# <schema> v<version>" followed by a column header.
inline constexpr std::string_view kBenchSchema = "road-bench-csv";
inline constexpr std::string_view kTraceSchema = "road-trace-csv";
inline constexpr std::string_view kAnalyzeSchema = "road-analyze-csv";
inline constexpr int kCsvVersion = 1;

inline constexpr std::string_view kBenchColumns =
    "kernel,b,l,d1,d2,r,wall_ns,flops,tokens_per_second,mode,scope";
inline constexpr std::string_view kTraceColumns = "epoch,loss";
inline constexpr std::string_view kAnalyzeColumns =
    "layer,mean_dm,mean_dd,count,dm_q1,dm_q2,dm_q3,dd_q1,dd_q2,dd_q3";

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Reads a versioned CSV: checks the version comment and column header, then
/// returns data rows split on commas. Throws ConfigError on unknown schema,
/// unknown version, wrong columns or ragged rows.
std::vector<std::vector<std::string>> read_versioned_csv(std::istream& in, std::string_view schema,
                                                         std::string_view columns);

void write_bench_csv(std::ostream& out, std::span<const BenchReport> reports);
std::vector<BenchReport> parse_bench_csv(std::istream& in);

void write_trace_csv(std::ostream& out, std::span<const double> epoch_loss);
std::vector<double> parse_trace_csv(std::istream& in);

struct LayerStats {
  std::string layer;
  RepStats stats;
};

void write_analyze_csv(std::ostream& out, std::span<const LayerStats> rows);

}  // namespace road
