#pragma once

// Per-step policy observation and its 6-frame history.
//
// Frame layout (all float64, fixed order):
//
//   [0, 3)                    command       v_x, yaw_rate, height
//   [3, 6)                    body rate     omega_x, omega_y, omega_z
//   [6, 9)                    gravity       g_x, g_y, g_z (projected unit vector)
//   [9, 9+N)                  q             joint positions, description order
//   [9+N, 9+2N)               qd            joint velocities
//   [9+2N, 9+2N+N_lower)      a_{t-1}       last action, lower joints in order
//
// The stack flattens oldest frame first: [O_{t-5}, ..., O_t].

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "wbt/robot_model.hpp"
#include "wbt/state.hpp"

namespace wbt::obs {

inline constexpr std::size_t kHistory = 6;
inline constexpr std::size_t kHeadDim = 9;  // command + body rate + gravity

struct FrameLayout {
  std::size_t n_joints{0};
  std::size_t n_lower{0};

  static FrameLayout of(const robot::RobotDescription& d) { return {d.n_joints(), d.n_lower()}; }

  [[nodiscard]] constexpr std::size_t command() const noexcept { return 0; }
  [[nodiscard]] constexpr std::size_t ang_vel() const noexcept { return 3; }
  [[nodiscard]] constexpr std::size_t gravity() const noexcept { return 6; }
  [[nodiscard]] constexpr std::size_t q() const noexcept { return kHeadDim; }
  [[nodiscard]] constexpr std::size_t qd() const noexcept { return kHeadDim + n_joints; }
  [[nodiscard]] constexpr std::size_t last_action() const noexcept { return kHeadDim + 2 * n_joints; }
  [[nodiscard]] constexpr std::size_t size() const noexcept { return kHeadDim + 2 * n_joints + n_lower; }

  friend bool operator==(const FrameLayout&, const FrameLayout&) = default;
};

struct ObservationFrame {
  FrameLayout layout;
  std::vector<double> values;

  [[nodiscard]] std::span<const double> command() const { return slice(layout.command(), 3); }
  [[nodiscard]] std::span<const double> ang_vel() const { return slice(layout.ang_vel(), 3); }
  [[nodiscard]] std::span<const double> gravity() const { return slice(layout.gravity(), 3); }
  [[nodiscard]] std::span<const double> q() const { return slice(layout.q(), layout.n_joints); }
  [[nodiscard]] std::span<const double> qd() const { return slice(layout.qd(), layout.n_joints); }
  [[nodiscard]] std::span<const double> last_action() const { return slice(layout.last_action(), layout.n_lower); }

  friend bool operator==(const ObservationFrame&, const ObservationFrame&) = default;

 private:
  [[nodiscard]] std::span<const double> slice(std::size_t off, std::size_t n) const {
    return std::span<const double>(values).subspan(off, n);
  }
};

/// Pure. Throws ShapeError when the state arrays disagree with `layout`.
[[nodiscard]] ObservationFrame assemble_frame(const FrameLayout& layout, const Command& cmd, const RobotState& state);

/// The (v_x, yaw_rate) ground-truth pair the estimator and critic consume.
[[nodiscard]] std::array<double, 2> ground_truth(const RobotState& state) noexcept;

class ObservationStack {
 public:
  /// Fills all six slots with `first` (episode-start convention).
  explicit ObservationStack(const ObservationFrame& first);

  /// Evicts the oldest frame. Throws ShapeError on a layout mismatch.
  void push(const ObservationFrame& frame);

  /// Frames oldest first.
  [[nodiscard]] const ObservationFrame& frame(std::size_t age_from_oldest) const;
  [[nodiscard]] const ObservationFrame& latest() const { return frame(kHistory - 1); }
  [[nodiscard]] const FrameLayout& layout() const noexcept { return layout_; }

  [[nodiscard]] std::vector<double> flatten() const;
  void flatten_into(std::span<double> out) const;

 private:
  FrameLayout layout_;
  std::array<ObservationFrame, kHistory> ring_;
  std::size_t head_{0};  // slot holding the oldest frame
};

/// Value-returning form of ObservationStack::push.
[[nodiscard]] ObservationStack push_frame(ObservationStack stack, const ObservationFrame& frame);

/// Input/output widths of the estimator, target, actor and critic networks.
struct NetShape {
  std::size_t encoder_in{0};
  std::size_t encoder_out{0};
  std::size_t target_in{0};
  std::size_t target_out{0};
  std::size_t actor_in{0};
  std::size_t actor_out{0};
  std::size_t critic_in{0};
  std::size_t critic_out{0};
  std::array<std::size_t, 2> proto{64, 32};

  friend bool operator==(const NetShape&, const NetShape&) = default;
};

/// Throws DegenerateRobot when n_lower == 0 (empty action space).
[[nodiscard]] NetShape net_shape(std::size_t n_joints, std::size_t n_lower);
[[nodiscard]] NetShape net_shape(const robot::RobotDescription& desc);

}  // namespace wbt::obs
