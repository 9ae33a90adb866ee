// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include "road/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace road {

const std::set<std::string>& RunConfig::allowed_keys(std::string_view command) {
  static const std::map<std::string, std::set<std::string>, std::less<>> keys = {
      {"verify", {"seed"}},
      {"gradcheck", {"seed", "kinds", "sizes", "tolerance"}},
      {"train-toy",
       {"seed", "adapter", "d2", "samples", "epochs", "lr", "batch_size", "optimizer", "output"}},
      {"bench",
       {"seed", "kernels", "b", "tokens", "r", "d1", "d2", "variant", "mode", "scope", "precision",
        "repetitions", "warmup", "output"}},
      {"compose", {"inputs", "masks", "output"}},
      {"analyze", {"seed", "input", "layers", "pairs", "dim", "output"}},
      {"export", {"seed", "variant", "d2", "layers", "random", "output"}},
      {"import", {"input", "output"}},
  };
  const auto it = keys.find(command);
  if (it == keys.end()) throw ConfigError("no configuration schema for command '" + std::string(command) + "'");
  return it->second;
}

RunConfig RunConfig::parse(std::string_view text, std::string_view command) {
  const auto& allowed = allowed_keys(command);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown config key '" + key + "' for command '" + std::string(command) + "'");
    }
  }
  RunConfig cfg;
  cfg.command_ = std::string(command);
  cfg.doc_ = std::move(doc);
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path, std::string_view command) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), command);
}

std::filesystem::path default_output_dir() {
  const char* env = std::getenv("ROAD_OUTPUT_DIR");
  if (env && *env) return env;
  return ".";
}

}  // namespace road
