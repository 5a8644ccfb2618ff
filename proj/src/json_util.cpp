#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace wbt::detail {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

robot::Range require_range(const json& obj, std::string_view key, std::string_view ctx) {
  auto v = require<std::vector<double>>(obj, key, ctx);
  if (v.size() != 2) {
    throw ConfigError(std::string(ctx) + ": '" + std::string(key) + "' must be [lo, hi]");
  }
  return {v[0], v[1]};
}

json range_to_json(const robot::Range& r) { return json::array({r.lo, r.hi}); }

void check_header(const json& doc, std::string_view format, int max_version) {
  const auto fmt = require<std::string>(doc, "format", format);
  if (fmt != format) {
    throw ConfigError("expected format '" + std::string(format) + "', got '" + fmt + "'");
  }
  const auto version = require<int>(doc, "version", format);
  if (version < 1 || version > max_version) {
    throw VersionError(std::string(format) + ": unsupported version " + std::to_string(version));
  }
}

}  // namespace wbt::detail
