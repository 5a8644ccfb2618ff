#pragma once

// Internal helpers shared by the config loaders.

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "wbt/errors.hpp"
#include "wbt/robot_model.hpp"

namespace wbt::detail {

using nlohmann::json;

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

[[nodiscard]] json parse_json(std::string_view text, std::string_view what);

/// `obj[key]` as T, with ConfigError naming the key when absent or mistyped.
template <typename T>
T require(const json& obj, std::string_view key, std::string_view ctx) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    throw ConfigError(std::string(ctx) + ": missing key '" + std::string(key) + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(ctx) + ": bad value for '" + std::string(key) + "': " + e.what());
  }
}

template <typename T>
T optional(const json& obj, std::string_view key, T fallback) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  return it->get<T>();
}

[[nodiscard]] robot::Range require_range(const json& obj, std::string_view key, std::string_view ctx);

[[nodiscard]] json range_to_json(const robot::Range& r);

/// Checks the "format"/"version" header every config document carries.
void check_header(const json& doc, std::string_view format, int max_version);

}  // namespace wbt::detail
