#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wbt::robot {

enum class JointGroup { lower, upper_arm, hand, waist };
enum class Side { left, right, center };

/// How a joint value transforms under reflection across the robot's x-z
/// plane: roll and yaw axes negate, pitch axes keep their sign.
enum class SignRule { keep, flip };

struct Range {
  double lo{0.0};
  double hi{0.0};

  [[nodiscard]] double clamp(double v) const noexcept { return v < lo ? lo : (v > hi ? hi : v); }
  [[nodiscard]] bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  [[nodiscard]] double width() const noexcept { return hi - lo; }
  friend bool operator==(const Range&, const Range&) = default;
};

struct JointSpec {
  std::string name;
  JointGroup group{JointGroup::lower};
  Side side{Side::center};
  double pos_min{0.0};      // rad
  double pos_max{0.0};      // rad
  double vel_max{0.0};      // rad/s
  double torque_max{0.0};   // N*m
  double kp{0.0};           // N*m/rad
  double kd{0.0};           // N*m*s/rad
  double default_pos{0.0};  // rad, q_0

  [[nodiscard]] Range limits() const noexcept { return {pos_min, pos_max}; }
  [[nodiscard]] bool is_upper() const noexcept { return group != JointGroup::lower; }
};

struct MirrorPair {
  std::size_t left{0};
  std::size_t right{0};
  SignRule rule{SignRule::keep};
};

struct MirrorCenter {
  std::size_t index{0};
  SignRule rule{SignRule::keep};
};

struct MirrorMap {
  std::vector<MirrorPair> pairs;
  std::vector<MirrorCenter> centers;
};

/// Two-link leg plus the pelvis offset above the hip joints (includes the
/// sole thickness), and the mass used for the synthesized contact forces.
struct Geometry {
  double thigh_len{0.3};
  double shank_len{0.3};
  double pelvis_offset{0.1};
  double hip_half_width{0.1};
  double mass{35.0};
};

struct CommandRanges {
  Range lin_vel_x;
  Range lin_vel_y;
  Range ang_vel_yaw;
};

/// Per-robot scheduling constants from the training setup.
struct Intervals {
  double push{4.0};
  double pose_resample{1.0};
  double command_resample{4.0};
};

/// Joint indices of one leg, resolved from `<side>_<joint>` names.
struct LegIndices {
  std::size_t hip_pitch{0};
  std::size_t hip_roll{0};
  std::size_t hip_yaw{0};
  std::size_t knee{0};
  std::size_t ankle_pitch{0};
  std::size_t ankle_roll{0};
};

struct RobotDescription {
  std::string name;
  std::vector<JointSpec> joints;
  std::vector<std::size_t> knee_indices;
  double ankle_kp_scale{0.8};
  MirrorMap mirror_map;
  Geometry geometry;
  double height_target_walk{0.0};
  Range squat_height_range;
  CommandRanges cmd_ranges;
  Intervals intervals;
  // Lower bound of the commanded-height clamp, as a fraction of the walking
  // height. The printed squat ranges start below zero.
  double min_height_fraction{0.2};

  // Derived at load time.
  std::vector<std::size_t> lower_indices;
  std::vector<std::size_t> upper_indices;
  std::vector<std::size_t> arm_indices;
  std::vector<std::size_t> hand_indices;
  std::vector<std::size_t> hip_indices;
  std::vector<std::size_t> ankle_indices;
  std::array<LegIndices, 2> legs{};  // [left, right]

  [[nodiscard]] std::size_t n_joints() const noexcept { return joints.size(); }
  [[nodiscard]] std::size_t n_lower() const noexcept { return lower_indices.size(); }
  [[nodiscard]] std::size_t n_upper() const noexcept { return upper_indices.size(); }

  /// Index of the joint called `name`, or nullopt.
  [[nodiscard]] std::optional<std::size_t> find_joint(std::string_view name) const;

  /// kp with the ankle scale applied.
  [[nodiscard]] double effective_kp(std::size_t joint) const;

  /// Range the commanded base height is clamped into.
  [[nodiscard]] Range height_command_range() const noexcept;

  /// Base heights the two-link legs can physically reach within joint limits.
  [[nodiscard]] Range reachable_height_range() const;
};

struct Violation {
  std::string field;
  std::string rule;
};

/// Recomputes the derived index lists. Called by the loaders; call it again
/// after editing `joints` or `mirror_map` by hand.
void finalize(RobotDescription& desc);

/// Empty iff every invariant holds.
[[nodiscard]] std::vector<Violation> validate(const RobotDescription& desc);

struct MirrorPermutation {
  std::vector<std::size_t> perm;  // perm[i] = joint that i maps onto
  std::vector<double> signs;      // +1 / -1 per joint
};

[[nodiscard]] MirrorPermutation mirror_index_permutation(const RobotDescription& desc);

/// Data directory holding the shipped presets; WBT_DATA_DIR env var wins
/// over the compiled-in location.
[[nodiscard]] std::filesystem::path default_data_dir();

/// Parse a description document (the JSON schema in docs/robot-format.md).
/// Throws ConfigError on schema problems or invariant violations.
[[nodiscard]] RobotDescription parse_description(std::string_view text);
[[nodiscard]] RobotDescription load_description_file(const std::filesystem::path& path);

/// Loads `<data_dir>/robots/<name>.json`; NotFound for unknown names.
[[nodiscard]] RobotDescription load_preset(std::string_view name,
                                           const std::filesystem::path& data_dir = default_data_dir());

/// Accepts either a preset name or a path to a description file.
[[nodiscard]] RobotDescription load_robot(std::string_view preset_or_path,
                                          const std::filesystem::path& data_dir = default_data_dir());

[[nodiscard]] std::string_view to_string(JointGroup g) noexcept;
[[nodiscard]] std::string_view to_string(Side s) noexcept;
[[nodiscard]] std::string_view to_string(SignRule r) noexcept;

}  // namespace wbt::robot
