#include "wbt/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "json_util.hpp"
#include "wbt/errors.hpp"

namespace wbt::robot {

namespace {

using detail::json;

JointGroup parse_group(const std::string& s, std::string_view ctx) {
  if (s == "lower") return JointGroup::lower;
  if (s == "upper-arm") return JointGroup::upper_arm;
  if (s == "hand") return JointGroup::hand;
  if (s == "waist") return JointGroup::waist;
  throw ConfigError(std::string(ctx) + ": unknown group '" + s + "'");
}

Side parse_side(const std::string& s, std::string_view ctx) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  if (s == "center") return Side::center;
  throw ConfigError(std::string(ctx) + ": unknown side '" + s + "'");
}

SignRule parse_rule(const std::string& s, std::string_view ctx) {
  if (s == "keep") return SignRule::keep;
  if (s == "flip") return SignRule::flip;
  throw ConfigError(std::string(ctx) + ": unknown sign rule '" + s + "'");
}

bool contains_word(std::string_view name, std::string_view word) {
  return name.find(word) != std::string_view::npos;
}

std::optional<LegIndices> resolve_leg(const RobotDescription& d, std::string_view side) {
  auto idx = [&](std::string_view joint) { return d.find_joint(std::string(side) + "_" + std::string(joint)); };
  auto hp = idx("hip_pitch");
  auto hr = idx("hip_roll");
  auto hy = idx("hip_yaw");
  auto kn = idx("knee");
  auto ap = idx("ankle_pitch");
  auto ar = idx("ankle_roll");
  if (!hp || !hr || !hy || !kn || !ap || !ar) return std::nullopt;
  return LegIndices{*hp, *hr, *hy, *kn, *ap, *ar};
}

double leg_length(const Geometry& g, double knee) {
  const double a = g.thigh_len;
  const double b = g.shank_len;
  return std::sqrt(std::max(0.0, a * a + b * b + 2.0 * a * b * std::cos(knee)));
}

}  // namespace

std::optional<std::size_t> RobotDescription::find_joint(std::string_view joint_name) const {
  for (std::size_t i = 0; i < joints.size(); ++i) {
    if (joints[i].name == joint_name) return i;
  }
  return std::nullopt;
}

double RobotDescription::effective_kp(std::size_t joint) const {
  const bool ankle = std::find(ankle_indices.begin(), ankle_indices.end(), joint) != ankle_indices.end();
  return ankle ? joints.at(joint).kp * ankle_kp_scale : joints.at(joint).kp;
}

Range RobotDescription::height_command_range() const noexcept {
  const double floor = min_height_fraction * height_target_walk;
  return {std::max(floor, squat_height_range.lo), std::min(height_target_walk, squat_height_range.hi)};
}

Range RobotDescription::reachable_height_range() const {
  if (knee_indices.empty()) return {geometry.pelvis_offset, geometry.pelvis_offset};
  const JointSpec& knee = joints.at(knee_indices.front());
  // Leg length is monotone decreasing in |knee| on [0, pi].
  const double straightest = knee.limits().clamp(0.0);
  const double deepest = std::abs(knee.pos_max) > std::abs(knee.pos_min) ? knee.pos_max : knee.pos_min;
  return {geometry.pelvis_offset + leg_length(geometry, deepest),
          geometry.pelvis_offset + leg_length(geometry, straightest)};
}

void finalize(RobotDescription& d) {
  d.lower_indices.clear();
  d.upper_indices.clear();
  d.arm_indices.clear();
  d.hand_indices.clear();
  d.hip_indices.clear();
  d.ankle_indices.clear();
  for (std::size_t i = 0; i < d.joints.size(); ++i) {
    const auto& j = d.joints[i];
    if (j.group == JointGroup::lower) {
      d.lower_indices.push_back(i);
      if (contains_word(j.name, "hip")) d.hip_indices.push_back(i);
      if (contains_word(j.name, "ankle")) d.ankle_indices.push_back(i);
    } else {
      d.upper_indices.push_back(i);
      if (j.group == JointGroup::upper_arm) d.arm_indices.push_back(i);
      if (j.group == JointGroup::hand) d.hand_indices.push_back(i);
    }
  }
  if (auto l = resolve_leg(d, "left")) d.legs[0] = *l;
  if (auto r = resolve_leg(d, "right")) d.legs[1] = *r;
}

std::vector<Violation> validate(const RobotDescription& d) {
  std::vector<Violation> out;
  auto add = [&](std::string field, std::string rule) { out.push_back({std::move(field), std::move(rule)}); };
  const std::size_t n = d.joints.size();

  std::vector<bool> limits_ok(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& j = d.joints[i];
    const std::string f = "joints[" + j.name + "]";
    if (!(j.pos_min < j.pos_max)) {
      add(f + ".pos_min", "pos_min < pos_max");
      limits_ok[i] = false;
    }
    if (!(j.kp > 0.0)) add(f + ".kp", "kp > 0");
    if (!(j.kd >= 0.0)) add(f + ".kd", "kd >= 0");
    if (!(j.vel_max > 0.0)) add(f + ".vel_max", "vel_max > 0");
    if (!(j.torque_max > 0.0)) add(f + ".torque_max", "torque_max > 0");
    if (limits_ok[i] && !(j.default_pos >= j.pos_min && j.default_pos <= j.pos_max)) {
      add(f + ".default_pos", "default_pos within [pos_min, pos_max]");
    }
  }

  // Perfect matching: each left joint in exactly one pair as left, each right
  // joint exactly once as right, each center joint listed once as a center.
  std::vector<int> seen(n, 0);
  for (const auto& p : d.mirror_map.pairs) {
    if (p.left >= n || p.right >= n) {
      add("mirror_map.pairs", "index out of range");
      continue;
    }
    const auto& l = d.joints[p.left];
    const auto& r = d.joints[p.right];
    ++seen[p.left];
    ++seen[p.right];
    if (l.side != Side::left || r.side != Side::right) {
      add("mirror_map.pairs[" + l.name + "," + r.name + "]", "pair must be (left, right)");
    }
    if (l.group != r.group) {
      add("mirror_map.pairs[" + l.name + "," + r.name + "]", "mirror preserves group");
    }
    if (limits_ok[p.left] && limits_ok[p.right]) {
      // Reflected limits must coincide so clamping commutes with mirroring.
      const bool flip = p.rule == SignRule::flip;
      const Range mirrored = flip ? Range{-r.pos_max, -r.pos_min} : r.limits();
      const double mirrored_default = flip ? -r.default_pos : r.default_pos;
      if (!(mirrored == l.limits()) || mirrored_default != l.default_pos) {
        add("mirror_map.pairs[" + l.name + "," + r.name + "]", "reflected limits and defaults must match");
      }
    }
  }
  for (const auto& c : d.mirror_map.centers) {
    if (c.index >= n) {
      add("mirror_map.centers", "index out of range");
      continue;
    }
    const auto& j = d.joints[c.index];
    ++seen[c.index];
    if (j.side != Side::center) add("mirror_map.centers[" + j.name + "]", "center entry must be a center joint");
    if (c.rule == SignRule::flip && limits_ok[c.index] &&
        (j.pos_min != -j.pos_max || j.default_pos != 0.0)) {
      add("mirror_map.centers[" + j.name + "]", "flipped center joint needs symmetric limits and zero default");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i] == 0) add("mirror_map[" + d.joints[i].name + "]", "joint is unpaired");
    if (seen[i] > 1) add("mirror_map[" + d.joints[i].name + "]", "joint appears more than once");
  }

  if (d.knee_indices.empty()) add("knee_indices", "at least one knee");
  for (auto k : d.knee_indices) {
    if (k >= n || d.joints[k].group != JointGroup::lower) add("knee_indices", "knee must be a lower joint");
  }
  if (d.n_lower() + d.n_upper() != n) add("joints", "N_joints = N_lower + N_upper");
  for (const char* side : {"left", "right"}) {
    if (!resolve_leg(d, side)) add(std::string("legs.") + side, "leg needs hip_pitch/roll/yaw, knee, ankle_pitch/roll");
  }

  const auto& g = d.geometry;
  if (!(g.thigh_len > 0.0 && g.shank_len > 0.0)) add("geometry", "link lengths > 0");
  if (!(g.pelvis_offset >= 0.0)) add("geometry.pelvis_offset", "pelvis_offset >= 0");
  if (!(g.mass > 0.0)) add("geometry.mass", "mass > 0");
  if (!(d.height_target_walk > 0.0)) add("height_target_walk", "height_target_walk > 0");
  if (!(d.ankle_kp_scale > 0.0)) add("ankle_kp_scale", "ankle_kp_scale > 0");
  if (!(d.squat_height_range.lo < d.squat_height_range.hi)) add("squat_height_range", "lo < hi");
  for (auto [name, r] : {std::pair{"cmd_ranges.lin_vel_x", d.cmd_ranges.lin_vel_x},
                         std::pair{"cmd_ranges.lin_vel_y", d.cmd_ranges.lin_vel_y},
                         std::pair{"cmd_ranges.ang_vel_yaw", d.cmd_ranges.ang_vel_yaw}}) {
    if (!(r.lo <= r.hi)) add(name, "lo <= hi");
  }
  if (!(d.intervals.push > 0.0 && d.intervals.pose_resample > 0.0 && d.intervals.command_resample > 0.0)) {
    add("intervals", "intervals > 0");
  }
  return out;
}

MirrorPermutation mirror_index_permutation(const RobotDescription& d) {
  MirrorPermutation m;
  const std::size_t n = d.joints.size();
  m.perm.resize(n);
  m.signs.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) m.perm[i] = i;
  for (const auto& p : d.mirror_map.pairs) {
    m.perm[p.left] = p.right;
    m.perm[p.right] = p.left;
    const double s = p.rule == SignRule::flip ? -1.0 : 1.0;
    m.signs[p.left] = s;
    m.signs[p.right] = s;
  }
  for (const auto& c : d.mirror_map.centers) {
    m.signs[c.index] = c.rule == SignRule::flip ? -1.0 : 1.0;
  }
  return m;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("WBT_DATA_DIR"); env != nullptr && *env != '\0') return env;
#ifdef WBT_DATA_DIR
  return WBT_DATA_DIR;
#else
  return "data";
#endif
}

RobotDescription parse_description(std::string_view text) {
  const json doc = detail::parse_json(text, "robot description");
  detail::check_header(doc, "wbt-robot", 1);
  constexpr std::string_view ctx = "robot description";

  RobotDescription d;
  d.name = detail::require<std::string>(doc, "name", ctx);
  d.height_target_walk = detail::require<double>(doc, "height_target_walk", ctx);
  d.squat_height_range = detail::require_range(doc, "squat_height_range", ctx);
  d.ankle_kp_scale = detail::optional<double>(doc, "ankle_kp_scale", 0.8);
  d.min_height_fraction = detail::optional<double>(doc, "min_height_fraction", 0.2);

  const auto& cmd = detail::require<json>(doc, "cmd_ranges", ctx);
  d.cmd_ranges.lin_vel_x = detail::require_range(cmd, "lin_vel_x", "cmd_ranges");
  d.cmd_ranges.lin_vel_y = detail::require_range(cmd, "lin_vel_y", "cmd_ranges");
  d.cmd_ranges.ang_vel_yaw = detail::require_range(cmd, "ang_vel_yaw", "cmd_ranges");

  const auto& geo = detail::require<json>(doc, "geometry", ctx);
  d.geometry.thigh_len = detail::require<double>(geo, "thigh_len", "geometry");
  d.geometry.shank_len = detail::require<double>(geo, "shank_len", "geometry");
  d.geometry.pelvis_offset = detail::require<double>(geo, "pelvis_offset", "geometry");
  d.geometry.hip_half_width = detail::require<double>(geo, "hip_half_width", "geometry");
  d.geometry.mass = detail::require<double>(geo, "mass", "geometry");

  if (auto it = doc.find("intervals"); it != doc.end()) {
    d.intervals.push = detail::optional<double>(*it, "push", 4.0);
    d.intervals.pose_resample = detail::optional<double>(*it, "pose_resample", 1.0);
    d.intervals.command_resample = detail::optional<double>(*it, "command_resample", 4.0);
  }

  for (const auto& jj : detail::require<json>(doc, "joints", ctx)) {
    JointSpec j;
    j.name = detail::require<std::string>(jj, "name", "joint");
    const std::string jctx = "joint " + j.name;
    j.group = parse_group(detail::require<std::string>(jj, "group", jctx), jctx);
    j.side = parse_side(detail::require<std::string>(jj, "side", jctx), jctx);
    const Range lim = detail::require_range(jj, "limits", jctx);
    j.pos_min = lim.lo;
    j.pos_max = lim.hi;
    j.vel_max = detail::require<double>(jj, "vel_max", jctx);
    j.torque_max = detail::require<double>(jj, "torque_max", jctx);
    j.kp = detail::require<double>(jj, "kp", jctx);
    j.kd = detail::require<double>(jj, "kd", jctx);
    j.default_pos = detail::require<double>(jj, "default", jctx);
    if (d.find_joint(j.name)) throw ConfigError("duplicate joint '" + j.name + "'");
    d.joints.push_back(std::move(j));
  }

  auto index_of = [&](const std::string& joint_name) {
    auto i = d.find_joint(joint_name);
    if (!i) throw ConfigError("unknown joint '" + joint_name + "' referenced");
    return *i;
  };
  for (const auto& k : detail::require<std::vector<std::string>>(doc, "knee_joints", ctx)) {
    d.knee_indices.push_back(index_of(k));
  }
  const auto& mirror = detail::require<json>(doc, "mirror", ctx);
  for (const auto& p : detail::require<json>(mirror, "pairs", "mirror")) {
    if (!p.is_array() || p.size() != 3) throw ConfigError("mirror pair must be [left, right, rule]");
    d.mirror_map.pairs.push_back({index_of(p[0].get<std::string>()), index_of(p[1].get<std::string>()),
                                  parse_rule(p[2].get<std::string>(), "mirror pair")});
  }
  for (const auto& c : detail::require<json>(mirror, "centers", "mirror")) {
    if (!c.is_array() || c.size() != 2) throw ConfigError("mirror center must be [joint, rule]");
    d.mirror_map.centers.push_back({index_of(c[0].get<std::string>()), parse_rule(c[1].get<std::string>(), "mirror center")});
  }

  finalize(d);
  if (auto v = validate(d); !v.empty()) {
    std::string msg = "robot description '" + d.name + "' is invalid:";
    for (const auto& x : v) msg += " [" + x.field + ": " + x.rule + "]";
    throw ConfigError(msg);
  }
  return d;
}

RobotDescription load_description_file(const std::filesystem::path& path) {
  return parse_description(detail::read_text_file(path));
}

RobotDescription load_preset(std::string_view name, const std::filesystem::path& data_dir) {
  static constexpr std::string_view kPresets[] = {"g1", "gr1"};
  if (std::find(std::begin(kPresets), std::end(kPresets), name) == std::end(kPresets)) {
    throw NotFound("unknown robot preset '" + std::string(name) + "'");
  }
  return load_description_file(data_dir / "robots" / (std::string(name) + ".json"));
}

RobotDescription load_robot(std::string_view preset_or_path, const std::filesystem::path& data_dir) {
  const std::filesystem::path p(preset_or_path);
  if (p.has_extension() || std::filesystem::exists(p)) return load_description_file(p);
  return load_preset(preset_or_path, data_dir);
}

std::string_view to_string(JointGroup g) noexcept {
  switch (g) {
    case JointGroup::lower: return "lower";
    case JointGroup::upper_arm: return "upper-arm";
    case JointGroup::hand: return "hand";
    case JointGroup::waist: return "waist";
  }
  return "?";
}

std::string_view to_string(Side s) noexcept {
  switch (s) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::center: return "center";
  }
  return "?";
}

std::string_view to_string(SignRule r) noexcept { return r == SignRule::flip ? "flip" : "keep"; }

}  // namespace wbt::robot
