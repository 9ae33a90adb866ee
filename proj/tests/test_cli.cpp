// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "road/adapter_file.hpp"
#include "road/cli.hpp"
#include "road/csv.hpp"
#include "road/run_config.hpp"

using namespace road;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = default_output_dir() / "cli_scratch";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("verify is deterministic and passes") {
  const Result a = run_cli({"verify", "--seed", "7"});
  const Result b = run_cli({"verify", "--seed", "7"});
  CHECK(a.code == cli::kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out.find("FAIL") == std::string::npos);
  CHECK(a.out.find("PASS serialization") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli({}).code == cli::kExitUsage);
  CHECK(run_cli({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run_cli({"verify", "--sead", "1"}).code == cli::kExitUsage);
  CHECK(run_cli({"verify", "--seed", "x"}).code == cli::kExitUsage);
  CHECK(run_cli({"train-toy", "--adapter", "lora"}).code == cli::kExitUsage);
  CHECK(run_cli({"bench", "--kernels", "nope"}).code == cli::kExitUsage);
  CHECK(run_cli({"gradcheck", "--kinds", "nope"}).code == cli::kExitUsage);
  CHECK(run_cli({"export", "--variant", "3"}).code == cli::kExitUsage);
  CHECK(run_cli({"--help"}).code == cli::kExitOk);
}

TEST_CASE("config files fill unset flags and reject unknown keys") {
  const auto good = scratch("verify.json");
  write_text(good, R"({"seed": 7})");
  CHECK(run_cli({"verify", "--config", good.string()}).out == run_cli({"verify", "--seed", "7"}).out);
  const auto bad = scratch("bad.json");
  write_text(bad, R"({"seed": 7, "speed": 1})");
  const Result r = run_cli({"verify", "--config", bad.string()});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("speed") != std::string::npos);

  const auto tcfg = scratch("train.json");
  const auto trace = scratch("from_config.csv");
  write_text(tcfg, R"({"d2": 8, "samples": 100, "epochs": 2, "output": ")" + trace.string() + R"("})");
  CHECK(run_cli({"train-toy", "--config", tcfg.string(), "--epochs", "3"}).code == cli::kExitOk);
  std::ifstream f(trace);
  CHECK(parse_trace_csv(f).size() == 3);
}

TEST_CASE("gradcheck reports per kind and size") {
  const Result r = run_cli({"gradcheck", "--kinds", "road1,lora", "--sizes", "4"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("PASS road1/d4") != std::string::npos);
  CHECK(r.out.find("PASS lora/d4") != std::string::npos);
  const Result strict = run_cli({"gradcheck", "--kinds", "road2", "--sizes", "4", "--tolerance", "0"});
  CHECK(strict.code == cli::kExitFailedChecks);
  const auto j = nlohmann::json::parse(strict.out.substr(strict.out.find('{')));
  CHECK(j["failures"][0]["check"] == "road2/d4");
}

TEST_CASE("train-toy writes a versioned trace") {
  const auto trace = scratch("trace.csv");
  const Result r = run_cli({"train-toy", "--d2", "8", "--samples", "200", "--epochs", "50", "--output",
                            trace.string()});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("max_angle_error") != std::string::npos);
  std::ifstream f(trace);
  const auto losses = parse_trace_csv(f);
  REQUIRE_FALSE(losses.empty());
  CHECK(losses.back() < losses.front());
  CHECK(run_cli({"train-toy", "--d2", "7"}).code == cli::kExitFailedChecks);
}

TEST_CASE("bench prints a versioned CSV with both kernels") {
  const auto path = scratch("bench.csv");
  const Result r = run_cli({"bench", "--b", "8", "--tokens", "64", "--r", "8", "--d", "256", "--repetitions",
                            "3", "--output", path.string()});
  REQUIRE(r.code == cli::kExitOk);
  std::istringstream s(r.out);
  const auto reports = parse_bench_csv(s);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].kernel == Kernel::lora_bmm);
  CHECK(reports[1].kernel == Kernel::road_elementwise);
  CHECK(reports[1].flops == road_adapter_flops(8, 64, 256));
  std::ifstream f(path);
  CHECK(parse_bench_csv(f).size() == 2);
  CHECK(run_cli({"bench", "--repetitions", "2"}).code == cli::kExitFailedChecks);
  CHECK(run_cli({"bench", "--kernels", "lora_merged_homogeneous", "--tokens", "4", "--d", "64"}).code ==
        cli::kExitFailedChecks);
}

TEST_CASE("export, compose and import round trip") {
  const auto a = scratch("a.rdad"), b = scratch("b.rdad"), c = scratch("c.rdad");
  REQUIRE(run_cli({"export", "--variant", "2", "--d2", "8", "--layers", "2", "--random", "--seed", "1",
                   "--output", a.string()}).code == cli::kExitOk);
  REQUIRE(run_cli({"export", "--variant", "2", "--d2", "8", "--layers", "2", "--random", "--seed", "2",
                   "--output", b.string()}).code == cli::kExitOk);
  const Result comp = run_cli({"compose", "--input", a.string(), "--mask", "upper", "--input", b.string(),
                               "--mask", "lower", "--output", c.string()});
  REQUIRE(comp.code == cli::kExitOk);
  const auto la = load_adapters(a), lb = load_adapters(b), lc = load_adapters(c);
  REQUIRE(lc.size() == 2);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(block(lc[l].adapter, i) == block(i < 2 ? la[l].adapter : lb[l].adapter, i));

  const Result imp = run_cli({"import", "--input", c.string()});
  REQUIRE(imp.code == cli::kExitOk);
  const auto j = nlohmann::json::parse(imp.out);
  CHECK(j["d2"] == 8);
  CHECK(j["layers"].size() == 2);
  CHECK(j["layers"][1]["theta"].get<std::vector<double>>() ==
        std::vector<double>(lc[1].adapter.theta().begin(), lc[1].adapter.theta().end()));

  CHECK(run_cli({"compose", "--input", a.string(), "--mask", "0-2", "--input", b.string(), "--mask", "2,3"})
            .code == cli::kExitFailedChecks);
  CHECK(run_cli({"compose", "--input", a.string(), "--mask", "upper", "--input", b.string()}).code ==
        cli::kExitUsage);
}

TEST_CASE("import reports the corrupt field") {
  const auto p = scratch("corrupt.rdad");
  REQUIRE(run_cli({"export", "--d2", "4", "--output", p.string()}).code == cli::kExitOk);
  std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(25);
  f.put('\x55');
  f.close();
  const Result r = run_cli({"import", "--input", p.string()});
  CHECK(r.code == cli::kExitFailedChecks);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["failures"][0]["check"] == "load:crc");
}

TEST_CASE("analyze summarizes pairs") {
  const auto pairs = scratch("pairs.txt");
  write_text(pairs, "# layer,x0,x\nq,1 0,2 0\nq,1 0,0 1\nv,3 4,3 4\n");
  const Result r = run_cli({"analyze", "--input", pairs.string()});
  REQUIRE(r.code == cli::kExitOk);
  std::istringstream s(r.out);
  const auto rows = read_versioned_csv(s, kAnalyzeSchema, kAnalyzeColumns);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][0] == "q");
  CHECK(rows[0][1] == "0.5");
  CHECK(rows[0][2] == "0.5");
  CHECK(rows[1][1] == "0");
  CHECK(rows[1][2] == "1");

  const Result syn = run_cli({"analyze", "--layers", "3", "--pairs", "20", "--dim", "8"});
  CHECK(syn.code == cli::kExitOk);
  CHECK(syn.out == run_cli({"analyze", "--layers", "3", "--pairs", "20", "--dim", "8"}).out);
  write_text(pairs, "q,0 0,1 1\n");
  CHECK(run_cli({"analyze", "--input", pairs.string()}).code == cli::kExitFailedChecks);
}
