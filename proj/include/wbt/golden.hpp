#pragma once

// Golden-table verification: the shipped presets are compared value by value
// against checked-in tables transcribed from the published training setup.

#include <filesystem>
#include <string>
#include <vector>

#include "wbt/robot_model.hpp"

namespace wbt::golden {

inline constexpr const char* kTables[] = {"reward_weights", "randomization_ranges", "key_parameters"};

struct Mismatch {
  std::string table;
  std::string robot;
  std::string row;
  std::string expected;  // as printed in the golden file
  std::string actual;

  [[nodiscard]] std::string describe() const;
};

struct TableResult {
  std::string table;
  std::string robot;
  std::size_t rows_checked{0};
  std::vector<Mismatch> mismatches;

  [[nodiscard]] bool ok() const noexcept { return mismatches.empty(); }
};

struct Report {
  std::vector<TableResult> tables;

  [[nodiscard]] bool ok() const noexcept;
};

/// Checks every golden table for both presets. Presets are read from
/// `data_dir`; golden files from `golden_dir` (default `<data_dir>/golden`).
/// Throws ConfigError when a golden file is missing or malformed.
[[nodiscard]] Report verify(const std::filesystem::path& data_dir = robot::default_data_dir(),
                            const std::filesystem::path& golden_dir = {});

[[nodiscard]] std::string format_report(const Report& r);

}  // namespace wbt::golden
