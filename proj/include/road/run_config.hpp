// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "road/error.hpp"

namespace road {

/// Command-scoped JSON settings. Parsing fails closed: any key the command
/// does not know is a ConfigError.
class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig parse(std::string_view text, std::string_view command);
  static RunConfig load(const std::filesystem::path& path, std::string_view command);

  /// Keys accepted by `command`; throws ConfigError for unknown commands.
  static const std::set<std::string>& allowed_keys(std::string_view command);

  const std::string& command() const noexcept { return command_; }
  bool has(const std::string& key) const { return doc_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    if (!doc_.contains(key)) return fallback;
    try {
      return doc_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }

 private:
  std::string command_;
  nlohmann::json doc_ = nlohmann::json::object();
};

/// $ROAD_OUTPUT_DIR if set and non-empty, else the current directory.
std::filesystem::path default_output_dir();

}  // namespace road
