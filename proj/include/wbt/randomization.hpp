#pragma once

// Per-episode physical randomization and per-step observation noise.

#include <filesystem>
#include <string_view>

#include "wbt/observation.hpp"
#include "wbt/plant.hpp"
#include "wbt/rng.hpp"
#include "wbt/robot_model.hpp"

namespace wbt::rand {

using robot::Range;

struct RandomizationConfig {
  Range actuation_offset{-0.05, 0.05};   // N*m, added
  Range torso_payload{-5.0, 10.0};       // kg, added
  Range hand_payload{-0.10, 0.30};       // kg, added
  Range com_displacement{-0.1, 0.1};     // m, added per axis
  Range link_mass{0.80, 1.20};           // scale
  Range friction{0.10, 2.00};
  Range restitution{0.00, 1.00};
  Range kp{0.90, 1.10};                  // scale
  Range kd{0.90, 1.10};                  // scale
  Range init_pos_scale{0.80, 1.20};
  Range init_pos_offset{-0.10, 0.10};    // rad
  Range push_vel{-0.50, 0.50};           // m/s, consumed by the plant
  Range obs_dof_pos{-0.02, 0.02};        // rad
  Range obs_dof_vel{-2.00, 2.00};        // rad/s
  Range obs_ang_vel{-0.50, 0.50};        // rad/s
  Range obs_gravity{-0.05, 0.05};
  bool per_episode_obs_bias{false};

  /// Throws ConfigError when lo > hi on any row.
  void validate() const;

  /// All rows collapsed to the identity ([1,1] scales, [0,0] offsets).
  static RandomizationConfig identity();
};

[[nodiscard]] RandomizationConfig parse_randomization(std::string_view text);
[[nodiscard]] RandomizationConfig load_randomization(const std::filesystem::path& path);
/// data/randomization/default.json (shared by both robots).
[[nodiscard]] RandomizationConfig load_default_randomization(
    const std::filesystem::path& data_dir = robot::default_data_dir());

/// Explicit record of one episode's draws.
struct EpisodeRandomization {
  std::vector<double> actuation_offset;  // per joint
  std::vector<double> kp_scale;
  std::vector<double> kd_scale;
  std::vector<double> init_pos_scale;
  std::vector<double> init_pos_offset;
  double torso_payload{0.0};
  double hand_payload{0.0};
  Vec3 com_offset{};
  double link_mass_scale{1.0};
  double friction{1.0};
  double restitution{0.0};

  friend bool operator==(const EpisodeRandomization&, const EpisodeRandomization&) = default;
};

[[nodiscard]] EpisodeRandomization sample_episode(const robot::RobotDescription& desc, const RandomizationConfig& cfg,
                                                  Rng& rng);

/// Plant perturbation for the record: initial q = scale * default + offset.
[[nodiscard]] plant::Perturbation to_perturbation(const robot::RobotDescription& desc, const EpisodeRandomization& ep);

/// Additive uniform noise on the body-rate, gravity, q and qd slots only.
[[nodiscard]] obs::ObservationFrame noisy_observation(const obs::ObservationFrame& frame,
                                                      const RandomizationConfig& cfg, Rng& rng);

/// Applies the noise model, i.i.d. per step or a bias fixed per episode.
class ObservationNoise {
 public:
  ObservationNoise(RandomizationConfig cfg, std::uint64_t seed);

  /// Draws a new per-episode bias (no effect in per-step mode).
  void new_episode(const obs::FrameLayout& layout);
  [[nodiscard]] obs::ObservationFrame apply(const obs::ObservationFrame& frame);

 private:
  RandomizationConfig cfg_;
  Rng rng_;
  std::vector<double> bias_;
};

}  // namespace wbt::rand
