#pragma once

// Left-right mirroring across the sagittal (x-z) plane for joints, commands,
// observation frames, states and transitions, plus the mirror losses.

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "wbt/observation.hpp"
#include "wbt/robot_model.hpp"
#include "wbt/state.hpp"

namespace wbt::sym {

struct MirrorSpec {
  obs::FrameLayout layout;
  std::vector<std::size_t> perm;        // joint space: out[i] = sign[i] * in[perm[i]]
  std::vector<double> signs;
  std::vector<std::size_t> lower_perm;  // same, over the lower-joint subset
  std::vector<double> lower_signs;
  Vec3 ang_vel_signs{-1.0, 1.0, -1.0};
  Vec3 gravity_signs{1.0, -1.0, 1.0};
  Vec3 command_signs{1.0, -1.0, 1.0};   // v_x, yaw rate, height
  Vec3 base_vel_signs{1.0, -1.0, 1.0};

  /// Throws ConfigError when a mirror pair crosses the lower/upper split.
  static MirrorSpec from(const robot::RobotDescription& desc);
};

[[nodiscard]] std::vector<double> mirror_joints(std::span<const double> v, const MirrorSpec& spec);
[[nodiscard]] std::vector<double> mirror_action(std::span<const double> a, const MirrorSpec& spec);
[[nodiscard]] Command mirror_command(const Command& c, const MirrorSpec& spec) noexcept;

/// Throws ShapeError when the frame layout differs from the mirror table.
[[nodiscard]] obs::ObservationFrame mirror_frame(const obs::ObservationFrame& frame, const MirrorSpec& spec);

/// Mirrors every frame of a flattened history (oldest first).
[[nodiscard]] std::vector<double> mirror_stacked(std::span<const double> flat, const MirrorSpec& spec);

/// Mirrors the full plant state; feet and knees swap sides.
[[nodiscard]] RobotState mirror_state(const RobotState& s, const MirrorSpec& spec);

struct Transition {
  std::vector<double> obs;       // flattened observation history
  std::vector<double> action;    // lower action
  double reward{0.0};
  std::vector<double> next_obs;
  bool done{false};

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// (T, T') with T' the mirrored transition; the reward is copied untouched.
[[nodiscard]] std::pair<Transition, Transition> augment_transition(const Transition& t, const MirrorSpec& spec);

class RolloutStorage {
 public:
  void add(Transition t) { items_.push_back(std::move(t)); }
  /// Stores T and its mirror.
  void add_augmented(const Transition& t, const MirrorSpec& spec);

  [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
  [[nodiscard]] const Transition& at(std::size_t i) const { return items_.at(i); }
  void clear() noexcept { items_.clear(); }

 private:
  std::vector<Transition> items_;
};

using PolicyFn = std::function<std::vector<double>(std::span<const double>)>;
using ValueFn = std::function<double(std::span<const double>)>;

struct SymmetryLosses {
  double actor{0.0};
  double critic{0.0};
};

/// Both callables receive the flattened history. By default the actor loss is
/// MSE(mirror(policy(x)), policy(mirror(x))); `literal` compares policy(x)
/// with policy(mirror(x)) directly. Throws ShapeError on output size errors.
[[nodiscard]] SymmetryLosses symmetry_losses(const PolicyFn& policy, const ValueFn& value,
                                             const obs::ObservationStack& stack, const MirrorSpec& spec,
                                             bool literal = false);

/// g(x) = (f(x) + mirror(f(mirror(x)))) / 2, mirror-equivariant by construction.
[[nodiscard]] PolicyFn symmetrized(PolicyFn f, const MirrorSpec& spec);

}  // namespace wbt::sym
