#include "wbt/reward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "json_util.hpp"

namespace wbt::reward {

namespace {

constexpr std::array<std::string_view, kTermCount> kNames = {
    "tracking_lin_vel_x", "tracking_lin_vel_y", "tracking_ang_vel", "tracking_base_height",
    "lin_vel_z",          "ang_vel_xy",         "orientation",      "action_rate",
    "hip_deviation",      "ankle_deviation",    "squat_knee",       "dof_acc",
    "dof_pos_limits",     "feet_air_time",      "feet_clearance",   "feet_lateral_distance",
    "knee_lateral_distance", "feet_ground_parallel", "feet_parallel", "smoothness",
    "joint_power",        "feet_stumble",       "torques",          "dof_vel",
    "dof_vel_limits",     "torque_limits",      "no_fly",           "joint_tracking_error",
    "feet_slip",          "feet_contact_force", "contact_momentum", "action_vanish",
    "stand_still",
};

constexpr std::array<Term, kTermCount> make_all() {
  std::array<Term, kTermCount> a{};
  for (std::size_t i = 0; i < kTermCount; ++i) a[i] = static_cast<Term>(i);
  return a;
}

constexpr auto kAllTerms = make_all();

double relu(double x) noexcept { return x > 0.0 ? x : 0.0; }
double sq(double x) noexcept { return x * x; }

double sq_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += sq(a[i] - b[i]);
  return s;
}

double population_variance(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += sq(x - mean);
  return var / static_cast<double>(v.size());
}

// Lateral separation shaping: rises from d_min, folds back above d_max.
double lateral_term(double dy, double d_min, double d_max) {
  const double d = std::abs(dy);
  if (d <= d_max) return d - d_min;
  return (d_max - d_min) - (d - d_max);
}

constexpr std::array<std::array<double, 2>, 4> kCorners = {{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

std::array<double, 4> corner_heights(const FootState& f, const RewardParams& p) {
  std::array<double, 4> h{};
  for (std::size_t c = 0; c < 4; ++c) {
    const double x = 0.5 * p.foot_length * kCorners[c][0];
    const double y = 0.5 * p.foot_width * kCorners[c][1];
    h[c] = f.pos[2] - x * std::sin(f.rpy[1]) + y * std::sin(f.rpy[0]) * std::cos(f.rpy[1]);
  }
  return h;
}

std::array<double, 2> corner_xy(const FootState& f, const RewardParams& p, std::size_t c) {
  const double x = 0.5 * p.foot_length * kCorners[c][0];
  const double y = 0.5 * p.foot_width * kCorners[c][1];
  const double cy = std::cos(f.rpy[2]);
  const double sy = std::sin(f.rpy[2]);
  return {f.pos[0] + cy * x - sy * y, f.pos[1] + sy * x + cy * y};
}

void expect(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string("reward: ") + what + " has " + std::to_string(got) + " entries, expected " +
                     std::to_string(want));
  }
}

}  // namespace

std::string_view to_string(Term t) noexcept { return kNames[static_cast<std::size_t>(t)]; }

std::optional<Term> term_from_string(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kTermCount; ++i) {
    if (kNames[i] == name) return static_cast<Term>(i);
  }
  return std::nullopt;
}

const std::array<Term, kTermCount>& all_terms() noexcept { return kAllTerms; }

RewardConfig parse_reward_config(std::string_view text) {
  using detail::json;
  const json doc = detail::parse_json(text, "reward config");
  detail::check_header(doc, "wbt-reward", 1);
  RewardConfig cfg;
  cfg.name = detail::require<std::string>(doc, "name", "reward config");
  cfg.dt = detail::optional<double>(doc, "dt", 0.02);

  const auto& w = doc.at("weights");
  if (!w.is_object()) throw ConfigError("reward config: 'weights' must be an object");
  for (auto it = w.begin(); it != w.end(); ++it) {
    if (!term_from_string(it.key())) throw ConfigError("reward config: unknown term '" + it.key() + "'");
  }
  for (Term t : kAllTerms) cfg.weights[t] = detail::require<double>(w, to_string(t), "reward weights");

  const auto& p = doc.at("params");
  auto& rp = cfg.params;
  rp.soft_pos_limit = detail::require<double>(p, "soft_pos_limit", "reward params");
  rp.soft_vel_limit = detail::require<double>(p, "soft_vel_limit", "reward params");
  rp.soft_torque_limit = detail::require<double>(p, "soft_torque_limit", "reward params");
  rp.max_contact_force = detail::require<double>(p, "max_contact_force", "reward params");
  rp.d_min_feet = detail::require<double>(p, "d_min_feet", "reward params");
  rp.d_min_knee = detail::require<double>(p, "d_min_knee", "reward params");
  rp.d_max_feet = detail::require<double>(p, "d_max_feet", "reward params");
  rp.d_max_knee = detail::require<double>(p, "d_max_knee", "reward params");
  rp.clearance_target = detail::require<double>(p, "clearance_target", "reward params");
  rp.air_time_offset = detail::optional<double>(p, "air_time_offset", rp.air_time_offset);
  rp.stand_still_eps = detail::optional<double>(p, "stand_still_eps", rp.stand_still_eps);
  rp.tracking_sigma = detail::optional<double>(p, "tracking_sigma", rp.tracking_sigma);
  rp.foot_length = detail::optional<double>(p, "foot_length", rp.foot_length);
  rp.foot_width = detail::optional<double>(p, "foot_width", rp.foot_width);
  rp.power_floor = detail::optional<double>(p, "power_floor", rp.power_floor);

  const double positives[] = {rp.soft_pos_limit, rp.soft_vel_limit, rp.soft_torque_limit, rp.max_contact_force,
                              rp.d_min_feet,     rp.d_min_knee,     rp.d_max_feet,        rp.d_max_knee,
                              rp.clearance_target, rp.foot_length,  rp.foot_width,        rp.power_floor, cfg.dt};
  for (double v : positives) {
    if (!(v > 0.0)) throw ConfigError("reward params: limits and distances must be positive");
  }
  if (rp.d_max_feet < rp.d_min_feet || rp.d_max_knee < rp.d_min_knee) {
    throw ConfigError("reward params: d_max below d_min");
  }
  return cfg;
}

RewardConfig load_reward_config(const std::filesystem::path& path) {
  return parse_reward_config(detail::read_text_file(path));
}

RewardConfig load_reward_preset(std::string_view preset, const std::filesystem::path& data_dir) {
  if (preset != "g1" && preset != "gr1") throw NotFound("unknown reward preset '" + std::string(preset) + "'");
  return load_reward_config(data_dir / "rewards" / (std::string(preset) + ".json"));
}

double r_knee(double h_r, double h_t, double q_knee, double q_min, double q_max) {
  if (q_min == q_max) throw ConfigError("r_knee: knee range is empty (q_min == q_max)");
  const double n = (q_knee - q_min) / (q_max - q_min);
  return -std::abs((h_r - h_t) * (n - 0.5));
}

double r_knee(const robot::RobotDescription& desc, double h_r, double h_t, std::span<const double> q) {
  if (desc.knee_indices.empty()) throw ConfigError("r_knee: robot has no knee joints");
  double sum = 0.0;
  for (std::size_t k : desc.knee_indices) {
    const auto& j = desc.joints[k];
    sum += r_knee(h_r, h_t, q[k], j.pos_min, j.pos_max);
  }
  return sum / static_cast<double>(desc.knee_indices.size());
}

bool stand_still_gate(const Command& cmd, double eps) noexcept {
  return std::abs(cmd.v_x) <= eps && std::abs(cmd.yaw_rate) <= eps;
}

Evaluation evaluate(const robot::RobotDescription& desc, const RewardConfig& cfg, const RewardInputs& in,
                    const ContactMemory& memory) {
  if (in.state == nullptr || in.prev == nullptr) throw ConfigError("reward: state and previous state are required");
  const RobotState& s = *in.state;
  const RobotState& prev = *in.prev;
  const auto& p = cfg.params;
  const std::size_t n = desc.n_joints();
  expect(s.q.size(), n, "q");
  expect(s.qd.size(), n, "qd");
  expect(s.tau.size(), n, "tau");
  expect(prev.qd.size(), n, "previous qd");
  expect(in.a_t.size(), desc.n_lower(), "a_t");
  expect(in.a_prev.size(), desc.n_lower(), "a_{t-1}");
  expect(in.a_prev2.size(), desc.n_lower(), "a_{t-2}");
  if (!in.joint_targets.empty()) expect(in.joint_targets.size(), n, "joint targets");

  std::array<double, kTermCount> raw{};
  auto set = [&raw](Term t, double v) { raw[static_cast<std::size_t>(t)] = v; };
  auto track = [&p](double err2) { return std::exp(-p.tracking_sigma * err2); };

  set(Term::tracking_lin_vel_x, track(sq(s.base_vel[0] - in.cmd.v_x)));
  set(Term::tracking_lin_vel_y, track(sq(s.base_vel[1])));
  set(Term::tracking_ang_vel, track(sq(s.base_yaw_rate - in.cmd.yaw_rate)));
  set(Term::tracking_base_height, track(sq(s.base_height - in.cmd.height)));
  set(Term::lin_vel_z, sq(s.base_vel[2]));
  set(Term::ang_vel_xy, sq(s.ang_vel[0]) + sq(s.ang_vel[1]));
  set(Term::orientation, sq(s.gravity[0]) + sq(s.gravity[1]));
  set(Term::action_rate, sq_diff(in.a_t, in.a_prev));

  double hip = 0.0;
  for (std::size_t j : desc.hip_indices) hip += sq(s.q[j] - desc.joints[j].default_pos);
  set(Term::hip_deviation, hip);
  double ankle = 0.0;
  for (std::size_t j : desc.ankle_indices) ankle += sq(s.q[j] - desc.joints[j].default_pos);
  set(Term::ankle_deviation, ankle);

  // Stored as a magnitude so the negative table weight penalizes it.
  set(Term::squat_knee, -r_knee(desc, in.cmd.height, s.base_height, s.q));

  double acc = 0.0;
  double vel = 0.0;
  double pos_out = 0.0;
  double vel_out = 0.0;
  double tau_out = 0.0;
  double torques = 0.0;
  double power = 0.0;
  double tracking = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& spec = desc.joints[j];
    acc += sq(s.qd[j] - prev.qd[j]) / cfg.dt;
    vel += sq(s.qd[j]);
    const double mid = 0.5 * (spec.pos_min + spec.pos_max);
    const double half = 0.5 * (spec.pos_max - spec.pos_min) * p.soft_pos_limit;
    pos_out += relu((mid - half) - s.q[j]) + relu(s.q[j] - (mid + half));
    vel_out += relu(std::abs(s.qd[j]) - spec.vel_max * p.soft_vel_limit);
    tau_out += relu(std::abs(s.tau[j]) - spec.torque_max * p.soft_torque_limit);
    const double kp = desc.effective_kp(j);
    if (kp > 0.0) torques += sq(s.tau[j] / kp);
    power += std::abs(s.tau[j]) * std::abs(s.qd[j]);
    if (!in.joint_targets.empty()) tracking += sq(s.q[j] - in.joint_targets[j]);
  }
  set(Term::dof_acc, acc);
  set(Term::dof_vel, vel);
  set(Term::dof_pos_limits, pos_out);
  set(Term::dof_vel_limits, vel_out);
  set(Term::torque_limits, tau_out);
  set(Term::torques, torques);
  const double speed2 = sq(s.base_vel[0]) + sq(s.base_vel[1]) + sq(s.base_vel[2]) +
                        0.2 * (sq(s.ang_vel[0]) + sq(s.ang_vel[1]) + sq(s.ang_vel[2]));
  set(Term::joint_power, power / std::max(speed2, p.power_floor));
  set(Term::joint_tracking_error, tracking);

  // Feet: air time with a one-tick contact debounce.
  Evaluation out;
  out.memory = memory;
  double air = 0.0;
  double slip = 0.0;
  double clearance = 0.0;
  double force_over = 0.0;
  double momentum = 0.0;
  bool stumble = false;
  int on_ground = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& f = s.feet[i];
    const bool filt = f.contact || memory.last_contact[i];
    const bool first_contact = memory.air_time[i] > 0.0 && filt;
    const double t_air = memory.air_time[i] + cfg.dt;
    if (first_contact) air += t_air - p.air_time_offset;
    out.memory.air_time[i] = filt ? 0.0 : t_air;
    out.memory.last_contact[i] = f.contact;

    const double v_xy = std::hypot(f.vel[0], f.vel[1]);
    if (f.contact && !first_contact) slip += v_xy;
    clearance += sq(p.clearance_target - f.pos[2]) * v_xy;
    force_over += relu(f.force[2] - p.max_contact_force);
    momentum += std::abs(f.vel[2] * f.force[2]);
    if (std::hypot(f.force[0], f.force[1]) > 3.0 * std::abs(f.force[2])) stumble = true;
    if (f.contact) ++on_ground;
  }
  set(Term::feet_air_time, air);
  set(Term::feet_slip, slip);
  set(Term::feet_clearance, clearance);
  set(Term::feet_contact_force, force_over);
  set(Term::contact_momentum, momentum);
  set(Term::feet_stumble, stumble ? 1.0 : 0.0);
  set(Term::no_fly, on_ground == 1 ? 1.0 : 0.0);
  set(Term::stand_still, stand_still_gate(in.cmd, p.stand_still_eps) ? static_cast<double>(2 - on_ground) : 0.0);

  set(Term::feet_lateral_distance, lateral_term(s.feet[0].pos[1] - s.feet[1].pos[1], p.d_min_feet, p.d_max_feet));
  set(Term::knee_lateral_distance, lateral_term(s.knee_pos[0][1] - s.knee_pos[1][1], p.d_min_knee, p.d_max_knee));

  double ground_par = 0.0;
  for (const auto& f : s.feet) ground_par += population_variance(corner_heights(f, p));
  set(Term::feet_ground_parallel, ground_par);
  std::array<double, 4> dist{};
  for (std::size_t c = 0; c < 4; ++c) {
    const auto l = corner_xy(s.feet[0], p, c);
    const auto r = corner_xy(s.feet[1], p, c);
    dist[c] = std::hypot(l[0] - r[0], l[1] - r[1]);
  }
  set(Term::feet_parallel, population_variance(dist));

  double smooth = 0.0;
  for (std::size_t k = 0; k < in.a_t.size(); ++k) smooth += sq(in.a_t[k] - 2.0 * in.a_prev[k] + in.a_prev2[k]);
  set(Term::smoothness, smooth);

  double vanish = 0.0;
  for (std::size_t k = 0; k < in.a_t.size(); ++k) {
    const auto& spec = desc.joints[desc.lower_indices[k]];
    vanish += relu(in.a_t[k] - spec.pos_max) + relu(spec.pos_min - in.a_t[k]);
  }
  set(Term::action_vanish, vanish);

  double total = 0.0;
  for (std::size_t i = 0; i < kTermCount; ++i) {
    const double w = cfg.weights.w[i];
    out.breakdown.terms[i] = {raw[i], raw[i] * w};
    total += raw[i] * w;
  }
  out.breakdown.total = total;
  return out;
}

RewardBreakdown RewardTracker::step(const RewardInputs& in) {
  auto ev = evaluate(*desc_, cfg_, in, memory_);
  memory_ = ev.memory;
  return ev.breakdown;
}

}  // namespace wbt::reward
