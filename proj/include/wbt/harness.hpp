#pragma once

// Batch experiment driver: parallel scripted rollouts with the evaluation
// metric table, curriculum distribution checks and per-term reward dumps.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wbt/metrics.hpp"
#include "wbt/plant.hpp"
#include "wbt/robot_model.hpp"

namespace wbt::harness {

inline constexpr std::array<std::string_view, 5> kColumns{"Lin. Vel Error", "Ang. Vel Error", "Height Error",
                                                          "symmetry loss", "Living Time"};

struct EvalConfig {
  std::string robot{"g1"};
  std::string reward_preset;  // empty: same as robot
  std::size_t n_envs{1000};
  double seconds{20.0};
  double rho_a{1.0};
  std::uint64_t seed{0};
  bool perfect_tracking{false};
  bool randomize{false};
  plant::TorqueLaw torque_law{plant::TorqueLaw::literal};
  unsigned threads{0};              // 0: hardware concurrency
  double symmetry_interval_s{1.0};  // how often the mirror loss is sampled
  std::filesystem::path data_dir{robot::default_data_dir()};
};

struct Stat {
  double mean{0.0};
  double sd{0.0};  // sample standard deviation; 0 for a single value
};

/// Kahan-compensated two-pass mean and standard deviation.
[[nodiscard]] Stat mean_sd(std::span<const double> values);

struct EvalReport {
  EvalConfig config;
  std::vector<metrics::EpisodeMetrics> episodes;  // env order
  std::array<Stat, kColumns.size()> stats{};
  double wall_seconds{0.0};
  unsigned threads{1};
};

/// Runs n_envs independent episodes in a worker pool. Every environment owns
/// its generators (seeded from seed and the env index) and results are
/// reduced in env order, so the table does not depend on the thread count.
/// Throws ConfigError when n_envs == 0 or seconds <= 0.
[[nodiscard]] EvalReport eval_batch(const EvalConfig& cfg);

/// One environment of a batch; exposed for tests.
[[nodiscard]] metrics::EpisodeMetrics run_env(const EvalConfig& cfg, std::size_t env_index);

[[nodiscard]] std::string format_table(const EvalReport& r);
/// One row per environment.
[[nodiscard]] std::string format_csv(const EvalReport& r);

/// Kolmogorov-Smirnov distance between the samples and `cdf`. Sorts in place.
[[nodiscard]] double ks_statistic(std::vector<double>& samples, const std::function<double(double)>& cdf);

struct KsRow {
  double rho_a{0.0};
  std::size_t samples{0};
  double ks_cdf{0.0};      // against the truncated-exponential CDF
  double ks_uniform{0.0};  // against U(0, 1)
};

/// Throws ConfigError when samples < 10^4 or a ratio lies outside [0, 1].
[[nodiscard]] std::vector<KsRow> dist_check(const std::vector<double>& rho_values, std::size_t samples,
                                            std::uint64_t seed);
[[nodiscard]] std::string dist_check_json(const std::vector<KsRow>& rows);

struct DumpConfig {
  std::string robot{"g1"};
  std::string reward_preset;
  double seconds{5.0};
  double rho_a{1.0};
  std::uint64_t seed{0};
  std::filesystem::path data_dir{robot::default_data_dir()};
};

/// Scripted episode with per-term weighted rewards, as CSV (tick, t, total,
/// then one column per term in table order).
[[nodiscard]] std::string reward_dump_csv(const DumpConfig& cfg);

}  // namespace wbt::harness
