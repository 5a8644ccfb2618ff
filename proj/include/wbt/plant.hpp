#pragma once

// Surrogate humanoid plant: decoupled per-joint PD dynamics, two-link leg
// height kinematics, first-order base velocity lag, a damped roll/pitch
// pendulum driven by pushes, and synthesized foot contacts.

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "wbt/rng.hpp"
#include "wbt/robot_model.hpp"
#include "wbt/state.hpp"

namespace wbt::plant {

/// literal: tau = kp*(a - q0) - kd*qd, the default law, which never
/// feeds back the current position. conventional: tau = kp*(a - q) - kd*qd.
enum class TorqueLaw { literal, conventional };

struct PlantConfig {
  double dt_physics{0.005};
  double control_hz{50.0};
  int substeps{4};
  double inertia_lower{1.0};   // kg*m^2
  double inertia_upper{0.2};   // kg*m^2
  double base_vel_tau{0.3};    // s
  double tilt_stiffness{25.0}; // 1/s^2, includes the ankle correction
  double tilt_damping{6.0};    // 1/s
  double push_tilt_gain{1.0};  // rad/s of tilt rate per m/s of push
  double com_tilt_gain{5.0};   // rad/s^2 per metre of CoM displacement
  double fall_tilt_rad{0.7};
  double min_base_height{0.15};
  double push_interval{4.0};   // s; <= 0 disables pushes
  robot::Range push_vel_range{-0.5, 0.5};
  double contact_height{0.001};      // m
  double contact_stiffness{5.0e4};   // N/m
  double contact_damping{2.0e3};     // N*s/m
  double slip_damping{200.0};        // N*s/m, tangential
  TorqueLaw torque_law{TorqueLaw::literal};

  [[nodiscard]] double control_dt() const noexcept { return 1.0 / control_hz; }

  /// Throws ConfigError unless dt_physics * substeps == 1/control_hz and all
  /// rates, gains and thresholds are positive.
  void validate() const;

  /// Defaults with the robot's push interval.
  static PlantConfig for_robot(const robot::RobotDescription& desc);
};

struct JointGains {
  double kp{0.0};
  double kd{0.0};
  double default_pos{0.0};
  double torque_max{0.0};
};

/// PD torque saturated to +-torque_max.
[[nodiscard]] double pd_torque(const JointGains& g, double target, double q, double qd,
                               TorqueLaw law = TorqueLaw::literal) noexcept;
[[nodiscard]] double pd_torque(const robot::JointSpec& spec, double target, double q, double qd,
                               TorqueLaw law = TorqueLaw::literal) noexcept;

struct ActionCommand {
  std::vector<double> lower_targets;  // a_t, one per lower joint
  std::vector<double> upper_targets;  // q_upper, one per upper joint
  Vec3 base_velocity{};               // commanded v_x, v_y, yaw rate for the base lag
};

/// prev + (k/n)(next - prev), elementwise; exact at k = 0 and k = n.
[[nodiscard]] std::vector<double> interpolate_upper(std::span<const double> prev, std::span<const double> next,
                                                    int k, int n);

/// Per-episode physical perturbations, produced by the randomization module.
struct Perturbation {
  std::vector<double> kp_scale;        // per joint
  std::vector<double> kd_scale;        // per joint
  std::vector<double> torque_offset;   // N*m per joint
  std::vector<double> initial_q;       // rad per joint; empty = defaults
  double added_mass{0.0};              // kg, torso + hand payloads
  double link_mass_scale{1.0};
  Vec3 com_offset{};                   // m
  double friction{1.0};
  double restitution{0.0};

  static Perturbation identity(std::size_t n_joints);
};

/// Two-link forward kinematics of one leg, hip frame at the pelvis.
struct LegPose {
  double vertical{0.0};   // hip-to-sole height
  double foot_x{0.0};
  double foot_y{0.0};     // includes the lateral hip offset
  double knee_x{0.0};
  double knee_y{0.0};
  double knee_z{0.0};     // below the hip
  Vec3 foot_rpy{};
};

[[nodiscard]] LegPose leg_pose(const robot::RobotDescription& desc, std::span<const double> q, int leg);

/// Pelvis offset plus the mean leg height, clamped to [0, pelvis + thigh + shank].
[[nodiscard]] double base_height_from_joints(const robot::RobotDescription& desc, std::span<const double> q);

/// Everything the stepping function needs besides state and action.
class PlantModel {
 public:
  PlantModel(std::shared_ptr<const robot::RobotDescription> desc, PlantConfig cfg,
             Perturbation perturbation);

  [[nodiscard]] const robot::RobotDescription& desc() const noexcept { return *desc_; }
  [[nodiscard]] const std::shared_ptr<const robot::RobotDescription>& desc_ptr() const noexcept { return desc_; }
  [[nodiscard]] const PlantConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const Perturbation& perturbation() const noexcept { return pert_; }
  [[nodiscard]] const JointGains& gains(std::size_t joint) const { return gains_.at(joint); }
  [[nodiscard]] double inertia(std::size_t joint) const { return inertia_.at(joint); }
  [[nodiscard]] std::int64_t push_period_ticks() const noexcept { return push_ticks_; }

  /// Episode-start state: initial joint positions at rest, feet settled.
  [[nodiscard]] RobotState initial_state() const;

  /// Recomputes base height, feet, knees, gravity from q and tilt.
  void update_derived(RobotState& s, const RobotState* prev) const;

 private:
  std::shared_ptr<const robot::RobotDescription> desc_;
  PlantConfig cfg_;
  Perturbation pert_;
  std::vector<JointGains> gains_;
  std::vector<double> inertia_;
  std::int64_t push_ticks_{0};
};

/// Advances one control tick. Throws NumericalError on non-finite input.
[[nodiscard]] RobotState step(const PlantModel& model, const RobotState& state, const ActionCommand& action,
                              Rng& rng);

enum class Termination { none, fall, low_height, numeric };

struct TerminationStatus {
  bool terminated{false};
  Termination reason{Termination::none};
};

[[nodiscard]] TerminationStatus is_terminated(const RobotState& state, const PlantConfig& cfg) noexcept;
[[nodiscard]] std::string_view to_string(Termination t) noexcept;

/// Single-stepper wrapper owning the model, its state and its RNG.
class Plant {
 public:
  Plant(std::shared_ptr<const robot::RobotDescription> desc, PlantConfig cfg, std::uint64_t seed,
        Perturbation perturbation);

  const RobotState& reset();
  const RobotState& step(const ActionCommand& action);

  [[nodiscard]] const RobotState& state() const noexcept { return state_; }
  [[nodiscard]] const PlantModel& model() const noexcept { return model_; }
  [[nodiscard]] TerminationStatus termination() const noexcept { return is_terminated(state_, model_.config()); }

 private:
  PlantModel model_;
  Rng rng_;
  RobotState state_;
};

}  // namespace wbt::plant
