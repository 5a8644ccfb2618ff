#include "wbt/controller.hpp"

#include <algorithm>
#include <cmath>

#include "wbt/errors.hpp"

namespace wbt::control {

std::vector<double> leg_targets_for_height(const robot::RobotDescription& desc, double height) {
  const auto& g = desc.geometry;
  const double l1 = g.thigh_len;
  const double l2 = g.shank_len;
  const double reach = desc.reachable_height_range().clamp(height) - g.pelvis_offset;
  const double len = std::clamp(reach, std::abs(l1 - l2), l1 + l2);

  double cos_k = (len * len - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  cos_k = std::clamp(cos_k, -1.0, 1.0);

  std::vector<double> q(desc.n_joints());
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = desc.joints[j].default_pos;
  for (const auto& leg : desc.legs) {
    const double k = desc.joints[leg.knee].limits().clamp(std::acos(cos_k));
    const double hp = -std::atan2(l2 * std::sin(k), l1 + l2 * std::cos(k));
    q[leg.knee] = k;
    q[leg.hip_pitch] = hp;
    q[leg.ankle_pitch] = -(hp + k);
    q[leg.hip_roll] = 0.0;
    q[leg.hip_yaw] = 0.0;
    q[leg.ankle_roll] = 0.0;
  }
  std::vector<double> out(desc.n_lower());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::size_t j = desc.lower_indices[k];
    out[k] = desc.joints[j].limits().clamp(q[j]);
  }
  return out;
}

std::vector<double> servo_action(const robot::RobotDescription& desc, const obs::ObservationFrame& frame,
                                 plant::TorqueLaw law) {
  if (frame.layout.n_joints != desc.n_joints() || frame.layout.n_lower != desc.n_lower()) {
    throw ShapeError("servo_action: frame layout does not match the robot");
  }
  auto a = leg_targets_for_height(desc, frame.command()[2]);
  const auto q = frame.q();
  const auto qd = frame.qd();
  const double inertia = plant::PlantConfig{}.inertia_lower;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const std::size_t j = desc.lower_indices[k];
    const auto& spec = desc.joints[j];
    if (law == plant::TorqueLaw::literal) a[k] = spec.default_pos + (a[k] - q[j]);
    // Extra rate feedback up to critical damping of the nominal joint.
    if (spec.kp > 0.0) {
      const double extra = std::max(0.0, 2.0 * std::sqrt(spec.kp * inertia) - spec.kd);
      a[k] -= extra / spec.kp * qd[j];
    }
  }
  return a;
}

plant::ActionCommand scripted_action(const robot::RobotDescription& desc, const obs::ObservationFrame& frame,
                                     const std::vector<double>& upper_targets, plant::TorqueLaw law) {
  plant::ActionCommand act;
  act.lower_targets = servo_action(desc, frame, law);
  act.upper_targets = upper_targets;
  const auto cmd = frame.command();
  act.base_velocity = {cmd[0], 0.0, cmd[1]};
  return act;
}

}  // namespace wbt::control
