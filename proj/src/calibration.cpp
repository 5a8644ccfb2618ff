#include "wbt/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wbt/errors.hpp"

namespace wbt::cockpit {

double calibrate(const CalibrationEntry& e, double p) noexcept {
  return e.sign * e.k * (p + e.n * (std::numbers::pi / 2.0)) + e.tau_comp;
}

namespace {

using M = GloveMotion;
using F = Finger;

// Index/middle/ring rows are stored under Finger::index.
constexpr std::array<GloveChannelSpec, 9> kTable = {{
    {M::alpha, F::thumb, 65.0, 528, 0.123},
    {M::beta, F::thumb, 100.0, 1024, 0.098},
    {M::gamma, F::thumb, 90.0, 832, 0.108},
    {M::alpha, F::pinky, 70.0, 880, 0.080},
    {M::beta, F::pinky, 90.0, 1136, 0.079},
    {M::gamma, F::pinky, 45.0, 416, 0.108},
    {M::alpha, F::index, 70.0, 928, 0.075},
    {M::beta, F::index, 90.0, 1072, 0.088},
    {M::gamma, F::index, 40.0, 512, 0.078},
}};

}  // namespace

const std::array<GloveChannelSpec, 9>& glove_table() noexcept { return kTable; }

GloveChannelSpec glove_channel(GloveMotion m, Finger f, GloveCurve curve) {
  const Finger row = (f == Finger::middle || f == Finger::ring) ? Finger::index : f;
  for (auto spec : kTable) {
    if (spec.motion == m && spec.finger == row) {
      spec.finger = f;
      spec.curve = curve;
      return spec;
    }
  }
  throw NotFound("no glove channel for this finger and motion");
}

GloveReading glove_angle(const GloveChannelSpec& spec, double units) noexcept {
  GloveReading r;
  const double U = spec.unit_range;
  if (units < 0.0 || units > U) r.clamped = true;
  const double u = std::clamp(units, 0.0, U);
  if (spec.curve == GloveCurve::linear || spec.kappa == 0.0) {
    r.angle_deg = u * spec.angle_range_deg / U;
  } else {
    r.angle_deg = spec.angle_range_deg * std::expm1(spec.kappa * u / U) / std::expm1(spec.kappa);
  }
  return r;
}

void PedalConfig::validate() const {
  if (!(travel_deg > 0.0) || travel_deg > pot_range_deg) {
    throw ConfigError("pedal: travel must satisfy 0 < travel_deg <= pot_range_deg");
  }
  if (adc_max <= 0) throw ConfigError("pedal: adc_max must be positive");
}

double pedal_travel(const PedalConfig& cfg, int counts, int rest_counts) noexcept {
  const double deg_per_count = cfg.pot_range_deg / cfg.adc_max;
  const double angle = (counts - rest_counts) * deg_per_count;
  return std::clamp(angle / cfg.travel_deg, 0.0, 1.0);
}

Command pedal_command(const PedalInput& in, const robot::RobotDescription& desc) {
  const auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };
  const auto& r = desc.cmd_ranges;
  const double v_max = in.forward ? r.lin_vel_x.hi : r.lin_vel_x.lo;
  const double w_max = in.left ? r.ang_vel_yaw.hi : r.ang_vel_yaw.lo;
  const auto h = desc.height_command_range();
  const double tv = clamp01(in.velocity);
  const double tw = clamp01(in.yaw);
  const double th = clamp01(in.height);
  return {tv * v_max, tw * w_max, std::lerp(h.hi, h.lo, th)};
}

std::string_view to_string(GloveMotion m) noexcept {
  switch (m) {
    case GloveMotion::alpha: return "alpha";
    case GloveMotion::beta: return "beta";
    case GloveMotion::gamma: return "gamma";
  }
  return "?";
}

std::string_view to_string(Finger f) noexcept {
  switch (f) {
    case Finger::thumb: return "thumb";
    case Finger::index: return "index";
    case Finger::middle: return "middle";
    case Finger::ring: return "ring";
    case Finger::pinky: return "pinky";
  }
  return "?";
}

}  // namespace wbt::cockpit
