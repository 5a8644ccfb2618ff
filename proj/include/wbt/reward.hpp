#pragma once

// Locomotion reward terms with per-robot weights and a per-term breakdown.

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wbt/robot_model.hpp"
#include "wbt/state.hpp"

namespace wbt::reward {

enum class Term {
  tracking_lin_vel_x,
  tracking_lin_vel_y,
  tracking_ang_vel,
  tracking_base_height,
  lin_vel_z,
  ang_vel_xy,
  orientation,
  action_rate,
  hip_deviation,
  ankle_deviation,
  squat_knee,
  dof_acc,
  dof_pos_limits,
  feet_air_time,
  feet_clearance,
  feet_lateral_distance,
  knee_lateral_distance,
  feet_ground_parallel,
  feet_parallel,
  smoothness,
  joint_power,
  feet_stumble,
  torques,
  dof_vel,
  dof_vel_limits,
  torque_limits,
  no_fly,
  joint_tracking_error,
  feet_slip,
  feet_contact_force,
  contact_momentum,
  action_vanish,
  stand_still,
};

inline constexpr std::size_t kTermCount = 33;

[[nodiscard]] std::string_view to_string(Term t) noexcept;
[[nodiscard]] std::optional<Term> term_from_string(std::string_view name) noexcept;
[[nodiscard]] const std::array<Term, kTermCount>& all_terms() noexcept;

/// Shape parameters, kept apart from the weights so a weight preset swap
/// cannot change raw term values.
struct RewardParams {
  double soft_pos_limit{0.975};
  double soft_vel_limit{0.80};
  double soft_torque_limit{0.95};
  double max_contact_force{400.0};  // N
  double d_min_feet{0.20};
  double d_min_knee{0.20};
  double d_max_feet{0.35};
  double d_max_knee{0.35};
  double clearance_target{0.14};    // m
  double air_time_offset{0.5};      // s
  double stand_still_eps{0.05};
  double tracking_sigma{4.0};       // exp(-sigma * err^2)
  double foot_length{0.10};         // m, footprint for the parallelism terms
  double foot_width{0.05};
  double power_floor{0.01};
};

struct RewardWeights {
  std::array<double, kTermCount> w{};

  [[nodiscard]] double operator[](Term t) const noexcept { return w[static_cast<std::size_t>(t)]; }
  double& operator[](Term t) noexcept { return w[static_cast<std::size_t>(t)]; }
};

struct RewardConfig {
  std::string name;
  RewardWeights weights;
  RewardParams params;
  double dt{0.02};  // control period used by dof_acc and air time
};

/// Loads a "wbt-reward" document. Every term must carry a weight.
[[nodiscard]] RewardConfig parse_reward_config(std::string_view text);
[[nodiscard]] RewardConfig load_reward_config(const std::filesystem::path& path);
/// data/rewards/<preset>.json; NotFound for unknown presets.
[[nodiscard]] RewardConfig load_reward_preset(std::string_view preset,
                                              const std::filesystem::path& data_dir = robot::default_data_dir());

struct TermValue {
  double raw{0.0};
  double weighted{0.0};
};

struct RewardBreakdown {
  std::array<TermValue, kTermCount> terms{};
  double total{0.0};

  [[nodiscard]] const TermValue& operator[](Term t) const noexcept { return terms[static_cast<std::size_t>(t)]; }
};

/// Knee-flexion shaping for one knee: -|(h_r - h_t) * (n - 1/2)| with n the
/// normalized knee angle. Throws ConfigError when q_min == q_max.
[[nodiscard]] double r_knee(double h_r, double h_t, double q_knee, double q_min, double q_max);

/// r_knee averaged over the robot's knee joints.
[[nodiscard]] double r_knee(const robot::RobotDescription& desc, double h_r, double h_t, std::span<const double> q);

/// |v_x| <= eps and |yaw_rate| <= eps.
[[nodiscard]] bool stand_still_gate(const Command& cmd, double eps = 0.05) noexcept;

/// Per-foot air-time memory carried between ticks.
struct ContactMemory {
  std::array<double, 2> air_time{};
  std::array<bool, 2> last_contact{true, true};
};

struct RewardInputs {
  const RobotState* state{nullptr};
  const RobotState* prev{nullptr};
  Command cmd{};
  std::span<const double> a_t;         // lower action
  std::span<const double> a_prev;
  std::span<const double> a_prev2;
  std::span<const double> joint_targets;  // per joint; empty = no tracking error
};

struct Evaluation {
  RewardBreakdown breakdown;
  ContactMemory memory;  // memory to carry into the next tick
};

/// Pure: computes every term from the inputs and the incoming contact memory.
/// Throws ConfigError when state or prev is missing, ShapeError on sizes.
[[nodiscard]] Evaluation evaluate(const robot::RobotDescription& desc, const RewardConfig& cfg,
                                  const RewardInputs& in, const ContactMemory& memory);

/// One tracker per plant instance; owns the contact memory.
class RewardTracker {
 public:
  RewardTracker(const robot::RobotDescription& desc, RewardConfig cfg) : desc_(&desc), cfg_(std::move(cfg)) {}

  RewardBreakdown step(const RewardInputs& in);
  void reset() { memory_ = {}; }

  [[nodiscard]] const RewardConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const ContactMemory& memory() const noexcept { return memory_; }

 private:
  const robot::RobotDescription* desc_;
  RewardConfig cfg_;
  ContactMemory memory_;
};

}  // namespace wbt::reward
