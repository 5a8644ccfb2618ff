#include "wbt/plant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wbt/errors.hpp"

namespace wbt::plant {

namespace {

constexpr double kGravity = 9.81;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void expect_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(want) + ", got " + std::to_string(got));
  }
}

std::vector<double> filled_or(const std::vector<double>& v, std::size_t n, double fill, const char* what) {
  if (v.empty()) return std::vector<double>(n, fill);
  expect_size(v.size(), n, what);
  return v;
}

}  // namespace

void PlantConfig::validate() const {
  if (!(dt_physics > 0.0) || substeps < 1 || !(control_hz > 0.0)) {
    throw ConfigError("plant: dt_physics, substeps and control_hz must be positive");
  }
  if (std::abs(dt_physics * substeps * control_hz - 1.0) > 1e-9) {
    throw ConfigError("plant: dt_physics * substeps must equal 1 / control_hz");
  }
  if (!(inertia_lower > 0.0) || !(inertia_upper > 0.0)) throw ConfigError("plant: inertia must be positive");
  if (!(base_vel_tau > 0.0)) throw ConfigError("plant: base_vel_tau must be positive");
  if (!(tilt_stiffness > 0.0) || !(tilt_damping >= 0.0)) throw ConfigError("plant: bad tilt dynamics");
  if (!(fall_tilt_rad > 0.0) || !(min_base_height >= 0.0)) throw ConfigError("plant: bad termination thresholds");
  if (push_vel_range.lo > push_vel_range.hi) throw ConfigError("plant: push range lo > hi");
}

PlantConfig PlantConfig::for_robot(const robot::RobotDescription& desc) {
  PlantConfig c;
  c.push_interval = desc.intervals.push;
  return c;
}

namespace {

// Error-free transformations (Knuth two-sum, Dekker product).
struct Pair {
  double hi;
  double lo;
};

Pair two_sum(double a, double b) noexcept {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

Pair split(double a) noexcept {
  const double c = 134217729.0 * a;  // 2^27 + 1
  const double hi = c - (c - a);
  return {hi, a - hi};
}

Pair two_prod(double a, double b) noexcept {
  const double p = a * b;
  const auto [ah, al] = split(a);
  const auto [bh, bl] = split(b);
  return {p, ((ah * bh - p) + ah * bl + al * bh) + al * bl};
}

}  // namespace

double pd_torque(const JointGains& g, double target, double q, double qd, TorqueLaw law) noexcept {
  const double ref = law == TorqueLaw::literal ? g.default_pos : q;
  // kp*(target - ref) - kd*qd in compensated arithmetic, so cancellation
  // between the two terms does not cost accuracy.
  const Pair d = two_sum(target, -ref);
  const Pair p = two_prod(g.kp, d.hi);
  const Pair r = two_prod(g.kd, qd);
  const Pair s = two_sum(p.hi, -r.hi);
  const double tau = s.hi + (s.lo + ((p.lo - r.lo) + g.kp * d.lo));
  return std::clamp(tau, -g.torque_max, g.torque_max);
}

double pd_torque(const robot::JointSpec& spec, double target, double q, double qd, TorqueLaw law) noexcept {
  return pd_torque(JointGains{spec.kp, spec.kd, spec.default_pos, spec.torque_max}, target, q, qd, law);
}

std::vector<double> interpolate_upper(std::span<const double> prev, std::span<const double> next, int k, int n) {
  expect_size(next.size(), prev.size(), "interpolate_upper");
  if (n <= 0 || k < 0 || k > n) throw ConfigError("interpolate_upper: need 0 <= k <= n, n > 0");
  std::vector<double> out(prev.size());
  for (std::size_t i = 0; i < prev.size(); ++i) {
    if (k == 0) {
      out[i] = prev[i];
    } else if (k == n) {
      out[i] = next[i];
    } else {
      out[i] = prev[i] + (static_cast<double>(k) / n) * (next[i] - prev[i]);
    }
  }
  return out;
}

Perturbation Perturbation::identity(std::size_t n_joints) {
  Perturbation p;
  p.kp_scale.assign(n_joints, 1.0);
  p.kd_scale.assign(n_joints, 1.0);
  p.torque_offset.assign(n_joints, 0.0);
  return p;
}

LegPose leg_pose(const robot::RobotDescription& desc, std::span<const double> q, int leg) {
  const auto& li = desc.legs.at(static_cast<std::size_t>(leg));
  const auto& g = desc.geometry;
  const double hp = q[li.hip_pitch];
  const double hr = q[li.hip_roll];
  const double k = q[li.knee];
  const double side = leg == 0 ? 1.0 : -1.0;

  LegPose p;
  const double thigh_v = g.thigh_len * std::cos(hp);
  const double leg_v = thigh_v + g.shank_len * std::cos(hp + k);
  p.vertical = leg_v * std::cos(hr);
  p.knee_z = thigh_v * std::cos(hr);
  p.foot_x = -g.thigh_len * std::sin(hp) - g.shank_len * std::sin(hp + k);
  p.knee_x = -g.thigh_len * std::sin(hp);
  p.foot_y = side * g.hip_half_width + leg_v * std::sin(hr);
  p.knee_y = side * g.hip_half_width + thigh_v * std::sin(hr);
  p.foot_rpy = {hr + q[li.ankle_roll], hp + k + q[li.ankle_pitch], q[li.hip_yaw]};
  return p;
}

double base_height_from_joints(const robot::RobotDescription& desc, std::span<const double> q) {
  const auto& g = desc.geometry;
  const double mean = 0.5 * (leg_pose(desc, q, 0).vertical + leg_pose(desc, q, 1).vertical);
  return std::clamp(g.pelvis_offset + mean, 0.0, g.pelvis_offset + g.thigh_len + g.shank_len);
}

PlantModel::PlantModel(std::shared_ptr<const robot::RobotDescription> desc, PlantConfig cfg,
                       Perturbation perturbation)
    : desc_(std::move(desc)), cfg_(cfg), pert_(std::move(perturbation)) {
  if (!desc_) throw ConfigError("plant: null robot description");
  cfg_.validate();
  const std::size_t n = desc_->n_joints();
  pert_.kp_scale = filled_or(pert_.kp_scale, n, 1.0, "kp_scale");
  pert_.kd_scale = filled_or(pert_.kd_scale, n, 1.0, "kd_scale");
  pert_.torque_offset = filled_or(pert_.torque_offset, n, 0.0, "torque_offset");
  if (!pert_.initial_q.empty()) expect_size(pert_.initial_q.size(), n, "initial_q");

  gains_.resize(n);
  inertia_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& j = desc_->joints[i];
    gains_[i] = {desc_->effective_kp(i) * pert_.kp_scale[i], j.kd * pert_.kd_scale[i], j.default_pos, j.torque_max};
    inertia_[i] = j.is_upper() ? cfg_.inertia_upper : cfg_.inertia_lower;
  }
  if (cfg_.push_interval > 0.0) {
    push_ticks_ = std::max<std::int64_t>(1, std::llround(cfg_.push_interval * cfg_.control_hz));
  }
}

RobotState PlantModel::initial_state() const {
  const auto& d = *desc_;
  const std::size_t n = d.n_joints();
  RobotState s;
  s.q.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double q0 = pert_.initial_q.empty() ? d.joints[i].default_pos : pert_.initial_q[i];
    s.q[i] = d.joints[i].limits().clamp(q0);
  }
  s.qd.assign(n, 0.0);
  s.tau.assign(n, 0.0);
  s.last_action.resize(d.n_lower());
  for (std::size_t k = 0; k < d.n_lower(); ++k) s.last_action[k] = d.joints[d.lower_indices[k]].default_pos;
  update_derived(s, nullptr);
  return s;
}

void PlantModel::update_derived(RobotState& s, const RobotState* prev) const {
  const auto& d = *desc_;
  const double dt = cfg_.control_dt();
  s.base_height = base_height_from_joints(d, s.q);

  const double roll = s.tilt[0];
  const double pitch = s.tilt[1];
  s.gravity = {std::sin(pitch), -std::sin(roll) * std::cos(pitch), -std::cos(roll) * std::cos(pitch)};
  s.ang_vel = {s.tilt_rate[0], s.tilt_rate[1], s.base_yaw_rate};

  const double weight = (d.geometry.mass * pert_.link_mass_scale + pert_.added_mass) * kGravity;
  std::array<LegPose, 2> poses{leg_pose(d, s.q, 0), leg_pose(d, s.q, 1)};
  int n_contact = 0;
  for (int leg = 0; leg < 2; ++leg) {
    auto& f = s.feet[static_cast<std::size_t>(leg)];
    const auto& p = poses[static_cast<std::size_t>(leg)];
    const Vec3 pos{p.foot_x, p.foot_y, s.base_height - d.geometry.pelvis_offset - p.vertical};
    if (prev != nullptr) {
      const auto& pp = prev->feet[static_cast<std::size_t>(leg)].pos;
      f.vel = {(pos[0] - pp[0]) / dt + s.base_vel[0], (pos[1] - pp[1]) / dt + s.base_vel[1], (pos[2] - pp[2]) / dt};
    } else {
      f.vel = {0.0, 0.0, 0.0};
    }
    f.pos = pos;
    f.rpy = {p.foot_rpy[0] + roll, p.foot_rpy[1] + pitch, p.foot_rpy[2]};
    f.contact = pos[2] <= cfg_.contact_height;
    if (f.contact) ++n_contact;
    s.knee_pos[static_cast<std::size_t>(leg)] = {p.knee_x, p.knee_y, s.base_height - d.geometry.pelvis_offset - p.knee_z};
  }
  for (auto& f : s.feet) {
    if (!f.contact) {
      f.force = {0.0, 0.0, 0.0};
      continue;
    }
    const double penetration = std::max(0.0, -f.pos[2]);
    const double fz = weight / n_contact + cfg_.contact_stiffness * penetration - cfg_.contact_damping * f.vel[2];
    const double c = cfg_.slip_damping * pert_.friction;
    f.force = {-c * f.vel[0], -c * f.vel[1], std::max(0.0, fz)};
  }
}

RobotState step(const PlantModel& model, const RobotState& state, const ActionCommand& action, Rng& rng) {
  const auto& d = model.desc();
  const auto& cfg = model.config();
  expect_size(action.lower_targets.size(), d.n_lower(), "lower_targets");
  expect_size(action.upper_targets.size(), d.n_upper(), "upper_targets");
  expect_size(state.q.size(), d.n_joints(), "q");
  if (!all_finite(action.lower_targets) || !all_finite(action.upper_targets) || !all_finite(action.base_velocity)) {
    throw NumericalError("plant step: non-finite action");
  }
  if (!all_finite(state.q) || !all_finite(state.qd)) throw NumericalError("plant step: non-finite state");

  RobotState s = state;
  const double h = cfg.dt_physics;

  // Per-joint targets and the law each joint uses.
  const std::size_t n = d.n_joints();
  std::vector<double> target(n, 0.0);
  std::vector<TorqueLaw> law(n, TorqueLaw::conventional);
  for (std::size_t k = 0; k < d.n_lower(); ++k) {
    const std::size_t j = d.lower_indices[k];
    target[j] = action.lower_targets[k];
    law[j] = cfg.torque_law;
  }
  for (std::size_t k = 0; k < d.n_upper(); ++k) {
    const std::size_t j = d.upper_indices[k];
    target[j] = d.joints[j].limits().clamp(action.upper_targets[k]);
  }

  const auto& pert = model.perturbation();
  for (int sub = 0; sub < cfg.substeps; ++sub) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto& spec = d.joints[j];
      const double tau = pd_torque(model.gains(j), target[j], s.q[j], s.qd[j], law[j]) + pert.torque_offset[j];
      s.tau[j] = tau;
      double qd = s.qd[j] + h * tau / model.inertia(j);
      qd = std::clamp(qd, -spec.vel_max, spec.vel_max);
      double q = s.q[j] + h * qd;
      if (q <= spec.pos_min) {
        q = spec.pos_min;
        qd = 0.0;
      } else if (q >= spec.pos_max) {
        q = spec.pos_max;
        qd = 0.0;
      }
      s.q[j] = q;
      s.qd[j] = qd;
    }
    for (int axis = 0; axis < 2; ++axis) {
      const auto a = static_cast<std::size_t>(axis);
      // roll responds to lateral CoM shift, pitch to fore-aft.
      const double bias = axis == 0 ? -pert.com_offset[1] : pert.com_offset[0];
      const double acc = -cfg.tilt_stiffness * s.tilt[a] - cfg.tilt_damping * s.tilt_rate[a] + cfg.com_tilt_gain * bias;
      s.tilt_rate[a] += h * acc;
      s.tilt[a] += h * s.tilt_rate[a];
    }
  }

  const double dt = cfg.control_dt();
  const double alpha = 1.0 - std::exp(-dt / cfg.base_vel_tau);
  s.base_vel[0] += alpha * (action.base_velocity[0] - s.base_vel[0]);
  s.base_vel[1] += alpha * (action.base_velocity[1] - s.base_vel[1]);
  s.base_yaw_rate += alpha * (action.base_velocity[2] - s.base_yaw_rate);

  s.tick = state.tick + 1;
  s.t = static_cast<double>(s.tick) / cfg.control_hz;

  const auto period = model.push_period_ticks();
  if (period > 0 && s.tick % period == 0) {
    const double px = rng.uniform(cfg.push_vel_range.lo, cfg.push_vel_range.hi);
    const double py = rng.uniform(cfg.push_vel_range.lo, cfg.push_vel_range.hi);
    s.base_vel[0] += px;
    s.base_vel[1] += py;
    s.tilt_rate[1] += cfg.push_tilt_gain * px;
    s.tilt_rate[0] -= cfg.push_tilt_gain * py;
  }

  s.base_yaw += dt * s.base_yaw_rate;
  const double c = std::cos(s.base_yaw);
  const double sn = std::sin(s.base_yaw);
  s.base_xy[0] += dt * (c * s.base_vel[0] - sn * s.base_vel[1]);
  s.base_xy[1] += dt * (sn * s.base_vel[0] + c * s.base_vel[1]);

  s.last_action = action.lower_targets;
  model.update_derived(s, &state);
  s.base_vel[2] = (s.base_height - state.base_height) / dt;
  return s;
}

TerminationStatus is_terminated(const RobotState& s, const PlantConfig& cfg) noexcept {
  const bool finite = std::isfinite(s.base_height) && std::isfinite(s.tilt[0]) && std::isfinite(s.tilt[1]) &&
                      all_finite(s.q) && all_finite(s.qd);
  if (!finite) return {true, Termination::numeric};
  if (std::hypot(s.tilt[0], s.tilt[1]) > cfg.fall_tilt_rad) return {true, Termination::fall};
  if (s.base_height < cfg.min_base_height) return {true, Termination::low_height};
  return {};
}

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::none: return "none";
    case Termination::fall: return "fall";
    case Termination::low_height: return "low_height";
    case Termination::numeric: return "numeric";
  }
  return "unknown";
}

Plant::Plant(std::shared_ptr<const robot::RobotDescription> desc, PlantConfig cfg, std::uint64_t seed,
             Perturbation perturbation)
    : model_(std::move(desc), cfg, std::move(perturbation)), rng_(seed, RngStream::plant) {
  state_ = model_.initial_state();
}

const RobotState& Plant::reset() {
  state_ = model_.initial_state();
  return state_;
}

const RobotState& Plant::step(const ActionCommand& action) {
  state_ = plant::step(model_, state_, action, rng_);
  return state_;
}

}  // namespace wbt::plant
