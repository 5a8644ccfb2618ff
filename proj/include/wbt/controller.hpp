#pragma once

// Scripted stand-in for the trained actor: a height servo that places both
// legs on the two-link solution for the commanded height. The lower action
// is a pure function of one observation frame.

#include <vector>

#include "wbt/observation.hpp"
#include "wbt/plant.hpp"
#include "wbt/robot_model.hpp"

namespace wbt::control {

/// Lower-joint positions (lower order) that put the base at `height`, clamped
/// to the reachable leg length and to joint limits. Feet stay under the hips
/// with flat soles.
[[nodiscard]] std::vector<double> leg_targets_for_height(const robot::RobotDescription& desc, double height);

/// Lower action a_t for the frame. Under the literal torque law the action is
/// shifted by q0 - q so that kp * (a - q0) still pulls q toward the target. Both
/// laws add rate feedback so the nominal joint is critically damped.
[[nodiscard]] std::vector<double> servo_action(const robot::RobotDescription& desc, const obs::ObservationFrame& frame,
                                               plant::TorqueLaw law);

/// Full plant input: servo action, upper targets and base velocity command.
[[nodiscard]] plant::ActionCommand scripted_action(const robot::RobotDescription& desc,
                                                   const obs::ObservationFrame& frame,
                                                   const std::vector<double>& upper_targets, plant::TorqueLaw law);

}  // namespace wbt::control
