// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include "road/csv.hpp"

#include <charconv>
#include <sstream>

#include "road/error.hpp"

namespace road {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& s) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError("csv: cannot parse number '" + s + "'");
  }
  return v;
}

void write_header(std::ostream& out, std::string_view schema, std::string_view columns) {
  out << "# " << schema << " v" << kCsvVersion << '\n' << columns << '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

std::vector<std::vector<std::string>> read_versioned_csv(std::istream& in, std::string_view schema,
                                                         std::string_view columns) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: empty input");
  const std::string prefix = "# " + std::string(schema) + " v";
  if (line.rfind(prefix, 0) != 0) {
    throw ConfigError("csv: expected header '" + prefix + "N', got '" + line + "'");
  }
  const std::string ver = line.substr(prefix.size());
  if (ver != std::to_string(kCsvVersion)) {
    throw ConfigError("csv: unsupported " + std::string(schema) + " version '" + ver + "'");
  }
  if (!std::getline(in, line) || line != columns) {
    throw ConfigError("csv: unexpected column header '" + line + "'");
  }
  const std::size_t ncol = split(std::string(columns)).size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != ncol) throw ConfigError("csv: ragged row '" + line + "'");
    rows.push_back(std::move(fields));
  }
  return rows;
}

void write_bench_csv(std::ostream& out, std::span<const BenchReport> reports) {
  write_header(out, kBenchSchema, kBenchColumns);
  for (const BenchReport& r : reports) {
    out << to_string(r.kernel) << ',' << r.b << ',' << r.l << ',' << r.d1 << ',' << r.d2 << ','
        << r.r << ',' << r.wall_ns << ',' << r.flops << ',' << format_double(r.tokens_per_second)
        << ',' << to_string(r.mode) << ',' << to_string(r.scope) << '\n';
  }
}

std::vector<BenchReport> parse_bench_csv(std::istream& in) {
  std::vector<BenchReport> out;
  for (const auto& f : read_versioned_csv(in, kBenchSchema, kBenchColumns)) {
    BenchReport r;
    const auto k = kernel_from_string(f[0]);
    if (!k) throw ConfigError("csv: unknown kernel '" + f[0] + "'");
    r.kernel = *k;
    r.b = parse_number<std::size_t>(f[1]);
    r.l = parse_number<std::size_t>(f[2]);
    r.d1 = parse_number<std::size_t>(f[3]);
    r.d2 = parse_number<std::size_t>(f[4]);
    r.r = parse_number<std::size_t>(f[5]);
    r.wall_ns = parse_number<std::int64_t>(f[6]);
    r.flops = parse_number<std::uint64_t>(f[7]);
    r.tokens_per_second = parse_number<double>(f[8]);
    if (f[9] == "decode") {
      r.mode = ServeMode::decode;
    } else if (f[9] == "prefill") {
      r.mode = ServeMode::prefill;
    } else {
      throw ConfigError("csv: unknown mode '" + f[9] + "'");
    }
    if (f[10] == "adapter") {
      r.scope = BenchScope::adapter;
    } else if (f[10] == "layer") {
      r.scope = BenchScope::layer;
    } else {
      throw ConfigError("csv: unknown scope '" + f[10] + "'");
    }
    out.push_back(r);
  }
  return out;
}

void write_trace_csv(std::ostream& out, std::span<const double> epoch_loss) {
  write_header(out, kTraceSchema, kTraceColumns);
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    out << e << ',' << format_double(epoch_loss[e]) << '\n';
  }
}

std::vector<double> parse_trace_csv(std::istream& in) {
  std::vector<double> out;
  for (const auto& f : read_versioned_csv(in, kTraceSchema, kTraceColumns)) {
    if (parse_number<std::size_t>(f[0]) != out.size()) throw ConfigError("csv: epochs out of order");
    out.push_back(parse_number<double>(f[1]));
  }
  return out;
}

void write_analyze_csv(std::ostream& out, std::span<const LayerStats> rows) {
  write_header(out, kAnalyzeSchema, kAnalyzeColumns);
  for (const LayerStats& r : rows) {
    const RepStats& s = r.stats;
    out << r.layer << ',' << format_double(s.mean_dm) << ',' << format_double(s.mean_dd) << ','
        << s.count;
    for (double q : s.quartiles_dm) out << ',' << format_double(q);
    for (double q : s.quartiles_dd) out << ',' << format_double(q);
    out << '\n';
  }
}

}  // namespace road
