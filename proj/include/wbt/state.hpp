#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace wbt {

using Vec3 = std::array<double, 3>;

/// Operator locomotion command: forward speed, yaw rate, torso height.
struct Command {
  double v_x{0.0};      // m/s
  double yaw_rate{0.0}; // rad/s
  double height{0.0};   // m

  friend bool operator==(const Command&, const Command&) = default;
};

struct FootState {
  bool contact{false};
  Vec3 force{};  // N, body axes; z is the normal force
  Vec3 pos{};    // x, y in the body frame; z above ground
  Vec3 vel{};    // m/s
  Vec3 rpy{};    // sole roll, pitch, yaw relative to the ground
};

/// Full surrogate-plant state at one control tick. Foot and knee arrays are
/// ordered [left, right].
struct RobotState {
  std::int64_t tick{0};
  double t{0.0};                // s
  std::vector<double> q;        // rad, per joint
  std::vector<double> qd;       // rad/s, per joint
  std::vector<double> tau;      // N*m, torque applied during the last substep
  Vec3 ang_vel{};               // body angular velocity (roll, pitch, yaw rate)
  Vec3 gravity{0.0, 0.0, -1.0}; // unit gravity in the torso frame
  double base_height{0.0};      // m
  Vec3 base_vel{};              // m/s, body-aligned (x forward, y left, z up)
  double base_yaw_rate{0.0};    // rad/s
  std::array<double, 2> tilt{};       // roll, pitch (rad)
  std::array<double, 2> tilt_rate{};  // rad/s
  std::array<double, 2> base_xy{};    // m, world
  double base_yaw{0.0};               // rad, world
  std::array<FootState, 2> feet{};
  std::array<Vec3, 2> knee_pos{};
  std::vector<double> last_action;    // rad, per lower joint
};

}  // namespace wbt
