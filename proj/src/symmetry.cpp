#include "wbt/symmetry.hpp"

#include <string>

#include "wbt/errors.hpp"

namespace wbt::sym {

namespace {

void expect(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string("mirror: ") + what + " has " + std::to_string(got) + " entries, expected " +
                     std::to_string(want));
  }
}

std::vector<double> apply(std::span<const double> v, const std::vector<std::size_t>& perm,
                          const std::vector<double>& signs) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = signs[i] * v[perm[i]];
  return out;
}

Vec3 signed3(const Vec3& v, const Vec3& s) noexcept { return {s[0] * v[0], s[1] * v[1], s[2] * v[2]}; }

FootState mirror_foot(const FootState& f) {
  FootState m = f;
  m.pos[1] = -f.pos[1];
  m.vel[1] = -f.vel[1];
  m.force[1] = -f.force[1];
  m.rpy[0] = -f.rpy[0];
  m.rpy[2] = -f.rpy[2];
  return m;
}

}  // namespace

MirrorSpec MirrorSpec::from(const robot::RobotDescription& desc) {
  MirrorSpec s;
  s.layout = obs::FrameLayout::of(desc);
  auto joint = robot::mirror_index_permutation(desc);
  s.perm = std::move(joint.perm);
  s.signs = std::move(joint.signs);

  std::vector<std::size_t> lower_slot(desc.n_joints(), desc.n_joints());
  for (std::size_t k = 0; k < desc.n_lower(); ++k) lower_slot[desc.lower_indices[k]] = k;
  s.lower_perm.resize(desc.n_lower());
  s.lower_signs.resize(desc.n_lower());
  for (std::size_t k = 0; k < desc.n_lower(); ++k) {
    const std::size_t j = desc.lower_indices[k];
    const std::size_t slot = lower_slot[s.perm[j]];
    if (slot == desc.n_joints()) {
      throw ConfigError("mirror: lower joint '" + desc.joints[j].name + "' mirrors onto a non-lower joint");
    }
    s.lower_perm[k] = slot;
    s.lower_signs[k] = s.signs[j];
  }
  return s;
}

std::vector<double> mirror_joints(std::span<const double> v, const MirrorSpec& spec) {
  expect(v.size(), spec.perm.size(), "joint vector");
  return apply(v, spec.perm, spec.signs);
}

std::vector<double> mirror_action(std::span<const double> a, const MirrorSpec& spec) {
  expect(a.size(), spec.lower_perm.size(), "action");
  return apply(a, spec.lower_perm, spec.lower_signs);
}

Command mirror_command(const Command& c, const MirrorSpec& spec) noexcept {
  return {spec.command_signs[0] * c.v_x, spec.command_signs[1] * c.yaw_rate, spec.command_signs[2] * c.height};
}

obs::ObservationFrame mirror_frame(const obs::ObservationFrame& frame, const MirrorSpec& spec) {
  if (!(frame.layout == spec.layout)) throw ShapeError("mirror: frame layout does not match the robot");
  expect(frame.values.size(), spec.layout.size(), "frame");
  const auto& L = spec.layout;
  obs::ObservationFrame out{L, std::vector<double>(L.size())};
  auto& v = out.values;
  const auto& in = frame.values;
  for (std::size_t i = 0; i < 3; ++i) {
    v[L.command() + i] = spec.command_signs[i] * in[L.command() + i];
    v[L.ang_vel() + i] = spec.ang_vel_signs[i] * in[L.ang_vel() + i];
    v[L.gravity() + i] = spec.gravity_signs[i] * in[L.gravity() + i];
  }
  for (std::size_t i = 0; i < L.n_joints; ++i) {
    v[L.q() + i] = spec.signs[i] * in[L.q() + spec.perm[i]];
    v[L.qd() + i] = spec.signs[i] * in[L.qd() + spec.perm[i]];
  }
  for (std::size_t k = 0; k < L.n_lower; ++k) {
    v[L.last_action() + k] = spec.lower_signs[k] * in[L.last_action() + spec.lower_perm[k]];
  }
  return out;
}

std::vector<double> mirror_stacked(std::span<const double> flat, const MirrorSpec& spec) {
  const std::size_t fs = spec.layout.size();
  if (fs == 0 || flat.size() % fs != 0) throw ShapeError("mirror: stacked observation is not a whole number of frames");
  std::vector<double> out;
  out.reserve(flat.size());
  for (std::size_t off = 0; off < flat.size(); off += fs) {
    obs::ObservationFrame f{spec.layout, std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(off),
                                                             flat.begin() + static_cast<std::ptrdiff_t>(off + fs))};
    const auto m = mirror_frame(f, spec);
    out.insert(out.end(), m.values.begin(), m.values.end());
  }
  return out;
}

RobotState mirror_state(const RobotState& s, const MirrorSpec& spec) {
  RobotState m = s;
  m.q = mirror_joints(s.q, spec);
  m.qd = mirror_joints(s.qd, spec);
  if (!s.tau.empty()) m.tau = mirror_joints(s.tau, spec);
  m.last_action = mirror_action(s.last_action, spec);
  m.ang_vel = signed3(s.ang_vel, spec.ang_vel_signs);
  m.gravity = signed3(s.gravity, spec.gravity_signs);
  m.base_vel = signed3(s.base_vel, spec.base_vel_signs);
  m.base_yaw_rate = spec.ang_vel_signs[2] * s.base_yaw_rate;
  m.tilt[0] = -s.tilt[0];
  m.tilt_rate[0] = -s.tilt_rate[0];
  m.base_xy[1] = -s.base_xy[1];
  m.base_yaw = -s.base_yaw;
  m.feet = {mirror_foot(s.feet[1]), mirror_foot(s.feet[0])};
  m.knee_pos = {Vec3{s.knee_pos[1][0], -s.knee_pos[1][1], s.knee_pos[1][2]},
                Vec3{s.knee_pos[0][0], -s.knee_pos[0][1], s.knee_pos[0][2]}};
  return m;
}

std::pair<Transition, Transition> augment_transition(const Transition& t, const MirrorSpec& spec) {
  Transition m;
  m.obs = mirror_stacked(t.obs, spec);
  m.action = mirror_action(t.action, spec);
  m.reward = t.reward;
  m.next_obs = mirror_stacked(t.next_obs, spec);
  m.done = t.done;
  return {t, std::move(m)};
}

void RolloutStorage::add_augmented(const Transition& t, const MirrorSpec& spec) {
  auto [a, b] = augment_transition(t, spec);
  items_.push_back(std::move(a));
  items_.push_back(std::move(b));
}

SymmetryLosses symmetry_losses(const PolicyFn& policy, const ValueFn& value, const obs::ObservationStack& stack,
                               const MirrorSpec& spec, bool literal) {
  const auto x = stack.flatten();
  const auto mx = mirror_stacked(x, spec);
  SymmetryLosses out;

  const auto a = policy(x);
  const auto am = policy(mx);
  expect(a.size(), spec.lower_perm.size(), "policy output");
  expect(am.size(), spec.lower_perm.size(), "policy output");
  const auto ref = literal ? a : mirror_action(a, spec);
  double se = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) se += (ref[i] - am[i]) * (ref[i] - am[i]);
  out.actor = ref.empty() ? 0.0 : se / static_cast<double>(ref.size());

  const double v = value(x);
  const double vm = value(mx);
  out.critic = (v - vm) * (v - vm);
  return out;
}

PolicyFn symmetrized(PolicyFn f, const MirrorSpec& spec) {
  return [f = std::move(f), spec](std::span<const double> x) {
    const auto fx = f(x);
    const auto back = mirror_action(f(mirror_stacked(x, spec)), spec);
    expect(fx.size(), back.size(), "policy output");
    std::vector<double> g(fx.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (fx[i] + back[i]) * 0.5;
    return g;
  };
}

}  // namespace wbt::sym
