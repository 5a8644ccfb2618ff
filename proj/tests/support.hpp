#pragma once

#include <cmath>
#include <cstring>
#include <filesystem>
#include <memory>
#include <limits>
#include <string>

#include <unistd.h>

#include "wbt/robot_model.hpp"

namespace wbt::test {

inline std::filesystem::path data_dir() { return WBT_TEST_DATA_DIR; }

inline const robot::RobotDescription& g1() {
  static const robot::RobotDescription d = robot::load_preset("g1", data_dir());
  return d;
}

inline const robot::RobotDescription& gr1() {
  static const robot::RobotDescription d = robot::load_preset("gr1", data_dir());
  return d;
}

inline std::shared_ptr<const robot::RobotDescription> shared(const robot::RobotDescription& d) {
  return std::make_shared<const robot::RobotDescription>(d);
}

inline std::uint64_t bits_of(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

/// Distance in units in the last place between two finite doubles.
inline std::uint64_t ulp_distance(double a, double b) {
  if (a == b) return 0;
  auto ordered = [](double v) {
    const auto u = static_cast<std::int64_t>(bits_of(v));
    return u < 0 ? std::numeric_limits<std::int64_t>::min() - u : u;
  };
  const auto x = ordered(a);
  const auto y = ordered(b);
  return x > y ? static_cast<std::uint64_t>(x) - static_cast<std::uint64_t>(y)
               : static_cast<std::uint64_t>(y) - static_cast<std::uint64_t>(x);
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

}  // namespace wbt::test
