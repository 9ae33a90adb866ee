// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include "road/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "road/adapter_file.hpp"
#include "road/analysis.hpp"
#include "road/csv.hpp"
#include "road/error.hpp"
#include "road/run_config.hpp"
#include "road/serving.hpp"
#include "road/trainer.hpp"
#include "road/verify.hpp"

namespace road::cli {

namespace {

using nlohmann::json;

struct Failure {
  std::string check;
  std::string detail;
};

int report_failures(std::ostream& out, const std::vector<Failure>& failures) {
  if (failures.empty()) return kExitOk;
  json list = json::array();
  for (const auto& f : failures) list.push_back({{"check", f.check}, {"detail", f.detail}});
  out << json{{"failures", list}}.dump() << '\n';
  return kExitFailedChecks;
}

// Fills `value` from the config when the flag was not given on the command line.
template <typename T>
void from_config(const CLI::App* sub, const RunConfig& cfg, const std::string& flag,
                 const std::string& key, T& value) {
  if (cfg.has(key) && sub->count(flag) == 0) value = cfg.get<T>(key, value);
}

std::filesystem::path output_path(const std::string& given, const char* fallback_name) {
  if (!given.empty()) return given;
  return default_output_dir() / fallback_name;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

std::size_t parse_index(const std::string& s) {
  std::size_t pos = 0;
  const unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad block index '" + s + "'");
  return static_cast<std::size_t>(v);
}

// "upper", "lower", "all", or a comma list of block indices and inclusive ranges a-b.
SubspaceMask parse_mask(const std::string& text, std::size_t d2) {
  if (text == "upper") return SubspaceMask::upper_half(d2);
  if (text == "lower") return SubspaceMask::lower_half(d2);
  if (text == "all") return SubspaceMask::all(d2);
  SubspaceMask m;
  for (const std::string& part : split(text, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      m.block_ids.insert(parse_index(part));
    } else {
      const std::size_t lo = parse_index(part.substr(0, dash));
      const std::size_t hi = parse_index(part.substr(dash + 1));
      if (hi < lo) throw std::invalid_argument("empty block range '" + part + "'");
      for (std::size_t i = lo; i <= hi; ++i) m.block_ids.insert(i);
    }
  }
  return m;
}

RoadVariant parse_variant(int v) {
  try {
    return variant_from_int(v);
  } catch (const PreconditionError&) {
    throw CLI::ValidationError("--variant", "must be 1, 2 or 4");
  }
}

std::vector<double> parse_floats(const std::string& s) {
  std::vector<double> out;
  std::istringstream ss(s);
  double v = 0.0;
  while (ss >> v) out.push_back(v);
  if (!ss.eof()) throw std::invalid_argument("bad number in '" + s + "'");
  return out;
}

// Each line: layer,<x0 values>,<x values> with space-separated numbers.
std::vector<std::pair<std::string, std::vector<RepPair>>> read_pairs(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read '" + path + "'");
  std::vector<std::pair<std::string, std::vector<RepPair>>> layers;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, ',');
    if (fields.size() != 3) {
      throw Error(path + ":" + std::to_string(lineno) + ": expected layer,x0,x");
    }
    RepPair p{DenseVector(parse_floats(fields[1])), DenseVector(parse_floats(fields[2]))};
    auto it = std::find_if(layers.begin(), layers.end(),
                           [&](const auto& l) { return l.first == fields[0]; });
    if (it == layers.end()) {
      layers.push_back({fields[0], {}});
      it = layers.end() - 1;
    }
    it->second.push_back(std::move(p));
  }
  return layers;
}

// Pairs for a layer whose finetuned representation is a random scaled rotation of x0.
std::vector<RepPair> synthetic_pairs(std::size_t count, std::size_t dim, SeededRng& rng) {
  const std::size_t n = angle_count(RoadVariant::Road4, dim);
  std::vector<double> theta(n), alpha(n);
  for (double& t : theta) t = rng.uniform(-std::numbers::pi / 4, std::numbers::pi / 4);
  for (double& a : alpha) a = rng.uniform(0.9, 1.1);
  const FactoredRotation f = factorize(RoadAdapter(RoadVariant::Road4, dim, theta, alpha));
  std::vector<RepPair> pairs;
  for (std::size_t k = 0; k < count; ++k) {
    DenseVector x0(dim);
    for (std::size_t j = 0; j < dim; ++j) x0[j] = rng.normal();
    DenseVector x = apply_factored(f, x0);
    pairs.push_back({std::move(x0), std::move(x)});
  }
  return pairs;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"RoAd adapter toolkit", "road-cli"};
  app.require_subcommand(1);
  app.fallthrough(false);

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON settings; command-line flags take precedence")
        ->check(CLI::ExistingFile);
  };
  std::uint64_t seed = 0;
  std::string output;

  // verify
  auto* verify = app.add_subcommand("verify", "Run the invariant suite");
  verify->add_option("--seed", seed, "Seed for generated cases");
  add_config(verify);

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  std::vector<std::string> kinds{"road1", "road2", "road4", "lora", "diag", "cayley"};
  std::vector<std::size_t> sizes{8, 64};
  double tolerance = 1e-5;
  gradcheck->add_option("--seed", seed);
  gradcheck->add_option("--kinds", kinds, "road1,road2,road4,lora,diag,cayley")->delimiter(',');
  gradcheck->add_option("--sizes", sizes, "Even layer widths")->delimiter(',');
  gradcheck->add_option("--tolerance", tolerance);
  add_config(gradcheck);

  // train-toy
  auto* train_toy = app.add_subcommand("train-toy", "Hidden-rotation recovery experiment");
  std::string adapter_kind = "road1";
  std::size_t d2 = 32, samples = 2000;
  TrainConfig tcfg = recovery_config(0);
  std::string optimizer = "adam";
  train_toy->add_option("--seed", seed);
  train_toy->add_option("--adapter", adapter_kind)->check(CLI::IsMember({"road1", "road2", "road4", "diag"}));
  train_toy->add_option("--d2", d2);
  train_toy->add_option("--samples", samples);
  train_toy->add_option("--epochs", tcfg.epochs);
  train_toy->add_option("--lr", tcfg.lr);
  train_toy->add_option("--batch-size", tcfg.batch_size);
  train_toy->add_option("--optimizer", optimizer)->check(CLI::IsMember({"adam", "sgd"}));
  train_toy->add_option("--output", output, "Trace CSV path");
  add_config(train_toy);

  // bench
  auto* bench = app.add_subcommand("bench", "Serving throughput sweep");
  WorkloadSpec spec;
  std::vector<std::string> kernels{"lora_bmm", "road_elementwise"};
  std::size_t dim = 1024, d1 = 0;
  int variant = 1;
  std::string mode = "decode", scope = "adapter", precision = "f32";
  std::size_t repetitions = 5, warmup = 1;
  bench->add_option("--seed", seed);
  bench->add_option("--kernels", kernels)->delimiter(',');
  bench->add_option("--b", spec.batch_sizes, "Batch sizes")->delimiter(',');
  bench->add_option("--tokens", spec.token_counts, "Tokens per request")->delimiter(',');
  bench->add_option("--r", spec.ranks, "LoRA ranks")->delimiter(',');
  bench->add_option("--d", dim, "Sets d1 and d2");
  bench->add_option("--d1", d1, "Overrides --d for the input width");
  bench->add_option("--variant", variant);
  bench->add_option("--mode", mode)->check(CLI::IsMember({"decode", "prefill", "both"}));
  bench->add_option("--scope", scope)->check(CLI::IsMember({"adapter", "layer"}));
  bench->add_option("--precision", precision)->check(CLI::IsMember({"f32", "f64"}));
  bench->add_option("--repetitions", repetitions);
  bench->add_option("--warmup", warmup);
  bench->add_option("--output", output, "CSV path");
  add_config(bench);

  // compose
  auto* compose_cmd = app.add_subcommand("compose", "Stitch adapter files by block masks");
  std::vector<std::string> inputs, masks;
  compose_cmd->add_option("--input", inputs, "Adapter file (repeat)")->required();
  compose_cmd->add_option("--mask", masks, "upper|lower|all|i,j,a-b per input (repeat)")->required();
  compose_cmd->add_option("--output", output, "Composed adapter file");
  add_config(compose_cmd);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Representation change statistics");
  std::string input;
  std::size_t layers = 4, pairs = 256, rep_dim = 64;
  analyze->add_option("--input", input, "Pairs file: layer,x0,x per line");
  analyze->add_option("--seed", seed);
  analyze->add_option("--layers", layers, "Synthetic layers when no input is given");
  analyze->add_option("--pairs", pairs);
  analyze->add_option("--dim", rep_dim);
  analyze->add_option("--output", output, "CSV path");
  add_config(analyze);

  // export
  auto* export_cmd = app.add_subcommand("export", "Write an adapter file");
  bool random_params = false;
  std::size_t export_d2 = 8, export_layers = 1;
  int export_variant = 1;
  export_cmd->add_option("--seed", seed);
  export_cmd->add_option("--variant", export_variant);
  export_cmd->add_option("--d2", export_d2);
  export_cmd->add_option("--layers", export_layers);
  export_cmd->add_flag("--random", random_params, "Random parameters instead of identity");
  export_cmd->add_option("--output", output, "Adapter file path");
  add_config(export_cmd);

  // import
  auto* import_cmd = app.add_subcommand("import", "Validate and summarize an adapter file");
  import_cmd->add_option("--input", input)->required();
  import_cmd->add_option("--output", output, "JSON summary path");
  add_config(import_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    const RunConfig cfg = config_path.empty() ? RunConfig() : RunConfig::load(config_path, sub->get_name());
    from_config(sub, cfg, "--seed", "seed", seed);
    from_config(sub, cfg, "--output", "output", output);

    if (sub == verify) {
      std::vector<Failure> failures;
      for (const CheckResult& c : run_invariant_suite(seed)) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        if (!c.passed) failures.push_back({c.name, c.detail});
      }
      return report_failures(out, failures);
    }

    if (sub == gradcheck) {
      from_config(sub, cfg, "--kinds", "kinds", kinds);
      from_config(sub, cfg, "--sizes", "sizes", sizes);
      from_config(sub, cfg, "--tolerance", "tolerance", tolerance);
      std::vector<AdapterKind> ks;
      for (const auto& k : kinds) {
        const auto kind = adapter_kind_from_string(k);
        if (!kind) throw CLI::ValidationError("--kinds", "unknown adapter kind '" + k + "'");
        ks.push_back(*kind);
      }
      std::vector<Failure> failures;
      for (const auto& e : gradient_check_suite(ks, sizes, seed, tolerance)) {
        const std::string name = std::string(to_string(e.kind)) + "/d" + std::to_string(e.size);
        char buf[64];
        std::snprintf(buf, sizeof buf, "max rel error %.3e", e.max_rel_error);
        out << (e.passed ? "PASS " : "FAIL ") << name << ": " << buf << '\n';
        if (!e.passed) failures.push_back({name, buf});
      }
      return report_failures(out, failures);
    }

    if (sub == train_toy) {
      from_config(sub, cfg, "--adapter", "adapter", adapter_kind);
      from_config(sub, cfg, "--d2", "d2", d2);
      from_config(sub, cfg, "--samples", "samples", samples);
      from_config(sub, cfg, "--epochs", "epochs", tcfg.epochs);
      from_config(sub, cfg, "--lr", "lr", tcfg.lr);
      from_config(sub, cfg, "--batch-size", "batch_size", tcfg.batch_size);
      from_config(sub, cfg, "--optimizer", "optimizer", optimizer);
      tcfg.seed = seed;
      tcfg.optimizer = optimizer == "sgd" ? Optimizer::sgd : Optimizer::adam;
      const RecoveryTask task = make_recovery_task(d2, seed, samples);
      std::vector<double> losses;
      if (adapter_kind == "diag") {
        ToyModel m;
        m.layers.push_back({task.w0, DiagScaleAdapter::identity(d2), Nonlinearity::none, {}});
        losses = train(m, task.data, tcfg).epoch_loss;
        out << "final_loss " << format_double(losses.back()) << '\n';
      } else {
        const RoadVariant v = adapter_kind == "road1"   ? RoadVariant::Road1
                              : adapter_kind == "road2" ? RoadVariant::Road2
                                                        : RoadVariant::Road4;
        const RecoveryResult r = rotation_recovery_experiment(task, v, tcfg);
        losses = r.trace.epoch_loss;
        double worst = 0.0;
        for (double e : r.angle_error) worst = std::max(worst, std::abs(e));
        out << "final_loss " << format_double(r.final_loss) << '\n'
            << "epochs " << r.epochs_run << '\n'
            << "max_angle_error " << format_double(worst) << '\n'
            << "max_block_error " << format_double(r.max_block_error) << '\n';
      }
      const auto path = output_path(output, "trace.csv");
      std::ofstream f(path);
      if (!f) throw Error("cannot write '" + path.string() + "'");
      write_trace_csv(f, losses);
      out << "trace " << path.string() << '\n';
      return kExitOk;
    }

    if (sub == bench) {
      from_config(sub, cfg, "--kernels", "kernels", kernels);
      from_config(sub, cfg, "--b", "b", spec.batch_sizes);
      from_config(sub, cfg, "--tokens", "tokens", spec.token_counts);
      from_config(sub, cfg, "--r", "r", spec.ranks);
      from_config(sub, cfg, "--d", "d2", dim);
      from_config(sub, cfg, "--d1", "d1", d1);
      from_config(sub, cfg, "--variant", "variant", variant);
      from_config(sub, cfg, "--mode", "mode", mode);
      from_config(sub, cfg, "--scope", "scope", scope);
      from_config(sub, cfg, "--precision", "precision", precision);
      from_config(sub, cfg, "--repetitions", "repetitions", repetitions);
      from_config(sub, cfg, "--warmup", "warmup", warmup);
      spec.kernels.clear();
      for (const auto& k : kernels) {
        const auto kernel = kernel_from_string(k);
        if (!kernel) throw CLI::ValidationError("--kernels", "unknown kernel '" + k + "'");
        spec.kernels.push_back(*kernel);
      }
      spec.d2 = dim;
      spec.d1 = d1 ? d1 : dim;
      spec.road_variant = parse_variant(variant);
      spec.scope = scope == "layer" ? BenchScope::layer : BenchScope::adapter;
      spec.precision = precision == "f64" ? Precision::f64 : Precision::f32;
      spec.seed = seed;
      std::vector<BenchReport> reports;
      std::vector<ServeMode> modes;
      if (mode != "prefill") modes.push_back(ServeMode::decode);
      if (mode != "decode") modes.push_back(ServeMode::prefill);
      for (ServeMode m : modes) {
        spec.mode = m;
        const auto part = run_bench(spec, repetitions, warmup);
        reports.insert(reports.end(), part.begin(), part.end());
      }
      write_bench_csv(out, reports);
      const auto path = output_path(output, "bench.csv");
      std::ofstream f(path);
      if (!f) throw Error("cannot write '" + path.string() + "'");
      write_bench_csv(f, reports);
      return kExitOk;
    }

    if (sub == compose_cmd) {
      from_config(sub, cfg, "--input", "inputs", inputs);
      from_config(sub, cfg, "--mask", "masks", masks);
      if (inputs.size() != masks.size()) {
        throw CLI::ValidationError("--mask", "give exactly one mask per --input");
      }
      std::vector<std::vector<NamedAdapter>> files;
      for (const auto& p : inputs) files.push_back(load_adapters(p));
      std::vector<NamedAdapter> composed;
      for (std::size_t layer = 0; layer < files.front().size(); ++layer) {
        std::vector<std::pair<RoadAdapter, SubspaceMask>> parts;
        for (std::size_t k = 0; k < files.size(); ++k) {
          if (files[k].size() != files.front().size() ||
              files[k][layer].name != files.front()[layer].name) {
            throw PreconditionError("compose: input files must list the same layers in order");
          }
          const RoadAdapter& a = files[k][layer].adapter;
          parts.emplace_back(a, parse_mask(masks[k], a.d2()));
        }
        composed.push_back({files.front()[layer].name, compose(parts)});
      }
      const auto path = output_path(output, "composed.rdad");
      save_adapters(path, composed);
      out << "wrote " << path.string() << " (" << composed.size() << " layers)\n";
      return kExitOk;
    }

    if (sub == analyze) {
      from_config(sub, cfg, "--input", "input", input);
      from_config(sub, cfg, "--layers", "layers", layers);
      from_config(sub, cfg, "--pairs", "pairs", pairs);
      from_config(sub, cfg, "--dim", "dim", rep_dim);
      std::vector<std::pair<std::string, std::vector<RepPair>>> data;
      if (!input.empty()) {
        data = read_pairs(input);
      } else {
        if (rep_dim == 0 || rep_dim % 2 != 0) throw CLI::ValidationError("--dim", "must be even");
        for (std::size_t l = 0; l < layers; ++l) {
          SeededRng rng = SeededRng(seed).fork(l);
          data.push_back({"layer" + std::to_string(l), synthetic_pairs(pairs, rep_dim, rng)});
        }
      }
      std::vector<LayerStats> rows;
      for (const auto& [name, ps] : data) rows.push_back({name, summarize(ps)});
      write_analyze_csv(out, rows);
      if (!output.empty()) {
        std::ofstream f(output);
        if (!f) throw Error("cannot write '" + output + "'");
        write_analyze_csv(f, rows);
      }
      return kExitOk;
    }

    if (sub == export_cmd) {
      from_config(sub, cfg, "--variant", "variant", export_variant);
      from_config(sub, cfg, "--d2", "d2", export_d2);
      from_config(sub, cfg, "--layers", "layers", export_layers);
      from_config(sub, cfg, "--random", "random", random_params);
      const RoadVariant v = parse_variant(export_variant);
      std::vector<NamedAdapter> out_layers;
      for (std::size_t l = 0; l < export_layers; ++l) {
        RoadAdapter a = RoadAdapter::identity(v, export_d2);
        if (random_params) {
          SeededRng rng = SeededRng(seed).fork(l);
          for (double& t : a.theta()) t = rng.uniform(-std::numbers::pi, std::numbers::pi);
          for (double& x : a.alpha()) x = rng.uniform(0.5, 1.5);
        }
        out_layers.push_back({"layer" + std::to_string(l), quantize_f32(a)});
      }
      const auto path = output_path(output, "adapter.rdad");
      save_adapters(path, out_layers);
      out << "wrote " << path.string() << " (" << out_layers.size() << " layers, "
          << angle_count(v, export_d2) << " angles each)\n";
      return kExitOk;
    }

    if (sub == import_cmd) {
      from_config(sub, cfg, "--input", "input", input);
      std::vector<NamedAdapter> loaded;
      try {
        loaded = load_adapters(input);
      } catch (const CorruptFileError& e) {
        return report_failures(out, {{"load:" + e.field(), e.what()}});
      }
      json summary{{"file", input},
                   {"crc", "ok"},
                   {"variant", static_cast<int>(loaded.front().adapter.variant())},
                   {"d2", loaded.front().adapter.d2()}};
      json layer_list = json::array();
      for (const auto& l : loaded) {
        layer_list.push_back({{"name", l.name},
                              {"theta", std::vector<double>(l.adapter.theta().begin(), l.adapter.theta().end())},
                              {"alpha", std::vector<double>(l.adapter.alpha().begin(), l.adapter.alpha().end())}});
      }
      summary["layers"] = layer_list;
      out << summary.dump() << '\n';
      if (!output.empty()) {
        std::ofstream f(output);
        if (!f) throw Error("cannot write '" + output + "'");
        f << summary.dump(2) << '\n';
      }
      return kExitOk;
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    return report_failures(out, {{sub->get_name(), e.what()}});
  }
  return kExitUsage;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace road::cli
