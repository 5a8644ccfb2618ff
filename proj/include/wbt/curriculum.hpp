#pragma once

// Upper-body pose curriculum: truncated-exponential ratio sampling, ratio
// promotion, and the per-environment pose/command schedule.

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "wbt/rng.hpp"
#include "wbt/robot_model.hpp"
#include "wbt/state.hpp"

namespace wbt::curriculum {

/// lambda = 20 * (1 - rho_a).
[[nodiscard]] double lambda(double rho_a) noexcept;

/// Inverse-CDF draw of rho' on [0, 1]. rho_a == 1 returns u1 (uniform limit).
[[nodiscard]] double sample_rho_prime(double rho_a, double u1) noexcept;

/// a_i = u2 * rho'.
[[nodiscard]] double sample_ratio(double rho_a, double u1, double u2) noexcept;

/// Truncated exponential density on [0, 1]; 1 when rho_a == 1, 0 outside.
[[nodiscard]] double pdf(double rho_a, double x) noexcept;
[[nodiscard]] double cdf(double rho_a, double x) noexcept;

struct CurriculumState {
  double rho_a{0.0};
  double step{0.05};
  double threshold{0.8};  // mean x-velocity tracking reward needed to promote
};

/// rho_a += step (capped at 1) iff mean_xvel_reward >= threshold.
[[nodiscard]] CurriculumState maybe_promote(const CurriculumState& cur, double mean_xvel_reward) noexcept;

struct PromotionEvent {
  double from{0.0};
  double to{0.0};
  double mean_reward{0.0};
};

/// Averages the last `window` batch means before testing the threshold.
class Promoter {
 public:
  explicit Promoter(CurriculumState state = {}, std::size_t window = 1);

  std::optional<PromotionEvent> observe(double batch_mean_xvel_reward);
  [[nodiscard]] const CurriculumState& state() const noexcept { return state_; }

 private:
  CurriculumState state_;
  std::size_t window_;
  std::deque<double> recent_;
};

struct ScheduleConfig {
  double control_hz{50.0};
  double pose_interval{1.0};     // s
  double command_interval{4.0};  // s
  double ramp_duration{1.0};     // s
  double squat_probability{1.0 / 3.0};

  static ScheduleConfig for_robot(const robot::RobotDescription& desc);
};

/// Joint angle for ratio a on joint `spec`: default + sign * a * (distance to
/// the farther limit), clamped to the limits.
[[nodiscard]] double map_ratio(const robot::JointSpec& spec, double a, double sign) noexcept;

struct TickOutput {
  std::int64_t tick{0};
  double t{0.0};
  bool resample_pose{false};
  bool resample_command{false};
  bool squat{false};
  Command command{};
  std::vector<double> upper;  // emitted upper-joint angles, upper order
};

/// Per-environment schedule. tick() is called once per control tick starting
/// at tick 0; the episode start draws the first pose and command without
/// counting as a resample.
class Scheduler {
 public:
  Scheduler(const robot::RobotDescription& desc, ScheduleConfig cfg, std::uint64_t seed);

  TickOutput tick(double rho_a);

  [[nodiscard]] std::int64_t pose_period_ticks() const noexcept { return pose_ticks_; }
  [[nodiscard]] std::int64_t command_period_ticks() const noexcept { return cmd_ticks_; }
  [[nodiscard]] const std::vector<double>& pose_ratios() const noexcept { return ratios_; }

 private:
  void draw_pose(double rho_a);
  void draw_command();

  const robot::RobotDescription* desc_;
  ScheduleConfig cfg_;
  Rng rng_;
  std::int64_t next_tick_{0};
  std::int64_t pose_ticks_;
  std::int64_t cmd_ticks_;
  std::int64_t ramp_ticks_;
  std::int64_t ramp_start_{0};
  std::vector<double> ratios_;
  std::vector<double> ramp_from_;
  std::vector<double> ramp_to_;
  std::vector<double> emitted_;
  Command command_{};
  bool squat_{false};
};

}  // namespace wbt::curriculum
