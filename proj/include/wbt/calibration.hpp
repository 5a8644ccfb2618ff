#pragma once

// Cockpit signal mappings: exoskeleton joint calibration, glove Hall-sensor
// channels and the three-pedal locomotion command.

#include <array>
#include <string_view>

#include "wbt/robot_model.hpp"
#include "wbt/state.hpp"

namespace wbt::cockpit {

/// q = sign * k * (p + n*pi/2) + tau_comp.
struct CalibrationEntry {
  int sign{1};
  double k{1.0};
  int n{0};
  double tau_comp{0.0};  // rad
};

[[nodiscard]] double calibrate(const CalibrationEntry& e, double p) noexcept;

enum class GloveMotion { alpha, beta, gamma };           // tip pitch, pad pitch, pad yaw
enum class Finger { thumb, index, middle, ring, pinky };
enum class GloveCurve { linear, exponential };

inline constexpr std::size_t kGloveChannels = 15;

struct GloveChannelSpec {
  GloveMotion motion{GloveMotion::alpha};
  Finger finger{Finger::thumb};
  double angle_range_deg{0.0};
  int unit_range{0};
  double printed_accuracy{0.0};  // deg/unit, as tabulated
  GloveCurve curve{GloveCurve::linear};
  double kappa{2.0};             // exponential curvature

  [[nodiscard]] double accuracy() const noexcept { return angle_range_deg / unit_range; }
};

/// The nine tabulated rows (alpha/beta/gamma x thumb/pinky/other).
[[nodiscard]] const std::array<GloveChannelSpec, 9>& glove_table() noexcept;

/// Channel spec for one finger motion; index/middle/ring share the "other" row.
[[nodiscard]] GloveChannelSpec glove_channel(GloveMotion m, Finger f, GloveCurve curve = GloveCurve::linear);

struct GloveReading {
  double angle_deg{0.0};
  bool clamped{false};
};

/// Counts to degrees. Counts outside [0, unit_range] are clamped and flagged.
[[nodiscard]] GloveReading glove_angle(const GloveChannelSpec& spec, double units) noexcept;

struct PedalConfig {
  double pot_range_deg{270.0};
  double travel_deg{40.0};
  int adc_max{4095};

  /// Throws ConfigError unless 0 < travel_deg <= pot_range_deg.
  void validate() const;
};

/// Pedal travel fraction in [0, 1] from a potentiometer reading relative to
/// the released position.
[[nodiscard]] double pedal_travel(const PedalConfig& cfg, int counts, int rest_counts) noexcept;

struct PedalInput {
  double velocity{0.0};  // travel fraction per pedal
  double yaw{0.0};
  double height{0.0};
  bool forward{true};    // direction toggles
  bool left{true};
};

/// v = +-travel * V_max, w = +-travel * w_max, h = H_max - travel * (H_max - H_min),
/// with maxima taken from the robot's command ranges.
[[nodiscard]] Command pedal_command(const PedalInput& in, const robot::RobotDescription& desc);

[[nodiscard]] std::string_view to_string(GloveMotion m) noexcept;
[[nodiscard]] std::string_view to_string(Finger f) noexcept;

}  // namespace wbt::cockpit
