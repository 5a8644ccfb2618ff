#include "wbt/randomization.hpp"

#include <array>
#include <string>
#include <utility>

#include "json_util.hpp"

namespace wbt::rand {

namespace {

// Row key -> member, shared by the loader and validation.
using Member = Range RandomizationConfig::*;
constexpr std::array<std::pair<std::string_view, Member>, 16> kRows = {{
    {"actuation_offset", &RandomizationConfig::actuation_offset},
    {"torso_payload", &RandomizationConfig::torso_payload},
    {"hand_payload", &RandomizationConfig::hand_payload},
    {"com_displacement", &RandomizationConfig::com_displacement},
    {"link_mass", &RandomizationConfig::link_mass},
    {"friction", &RandomizationConfig::friction},
    {"restitution", &RandomizationConfig::restitution},
    {"kp", &RandomizationConfig::kp},
    {"kd", &RandomizationConfig::kd},
    {"init_pos_scale", &RandomizationConfig::init_pos_scale},
    {"init_pos_offset", &RandomizationConfig::init_pos_offset},
    {"push_vel", &RandomizationConfig::push_vel},
    {"obs_dof_pos", &RandomizationConfig::obs_dof_pos},
    {"obs_dof_vel", &RandomizationConfig::obs_dof_vel},
    {"obs_ang_vel", &RandomizationConfig::obs_ang_vel},
    {"obs_gravity", &RandomizationConfig::obs_gravity},
}};

double draw(Rng& rng, const Range& r) { return rng.uniform(r.lo, r.hi); }

std::vector<double> draw_n(Rng& rng, const Range& r, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = draw(rng, r);
  return v;
}

void add_noise(std::vector<double>& v, const obs::FrameLayout& L, const RandomizationConfig& cfg, Rng& rng) {
  for (std::size_t i = 0; i < 3; ++i) v[L.ang_vel() + i] += draw(rng, cfg.obs_ang_vel);
  for (std::size_t i = 0; i < 3; ++i) v[L.gravity() + i] += draw(rng, cfg.obs_gravity);
  for (std::size_t i = 0; i < L.n_joints; ++i) v[L.q() + i] += draw(rng, cfg.obs_dof_pos);
  for (std::size_t i = 0; i < L.n_joints; ++i) v[L.qd() + i] += draw(rng, cfg.obs_dof_vel);
}

}  // namespace

void RandomizationConfig::validate() const {
  for (const auto& [name, member] : kRows) {
    const Range& r = this->*member;
    if (r.lo > r.hi) throw ConfigError("randomization: '" + std::string(name) + "' has lo > hi");
  }
}

RandomizationConfig RandomizationConfig::identity() {
  RandomizationConfig c;
  for (const auto& [name, member] : kRows) c.*member = {0.0, 0.0};
  c.link_mass = c.kp = c.kd = c.init_pos_scale = {1.0, 1.0};
  c.friction = {1.0, 1.0};
  return c;
}

RandomizationConfig parse_randomization(std::string_view text) {
  const auto doc = detail::parse_json(text, "randomization config");
  detail::check_header(doc, "wbt-randomization", 1);
  const auto& ranges = detail::require<detail::json>(doc, "ranges", "randomization config");
  RandomizationConfig c;
  for (const auto& [name, member] : kRows) c.*member = detail::require_range(ranges, name, "randomization ranges");
  c.per_episode_obs_bias = detail::optional<bool>(doc, "per_episode_obs_bias", false);
  c.validate();
  return c;
}

RandomizationConfig load_randomization(const std::filesystem::path& path) {
  return parse_randomization(detail::read_text_file(path));
}

RandomizationConfig load_default_randomization(const std::filesystem::path& data_dir) {
  return load_randomization(data_dir / "randomization" / "default.json");
}

EpisodeRandomization sample_episode(const robot::RobotDescription& desc, const RandomizationConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t n = desc.n_joints();
  EpisodeRandomization ep;
  ep.actuation_offset = draw_n(rng, cfg.actuation_offset, n);
  ep.kp_scale = draw_n(rng, cfg.kp, n);
  ep.kd_scale = draw_n(rng, cfg.kd, n);
  ep.init_pos_scale = draw_n(rng, cfg.init_pos_scale, n);
  ep.init_pos_offset = draw_n(rng, cfg.init_pos_offset, n);
  ep.torso_payload = draw(rng, cfg.torso_payload);
  ep.hand_payload = draw(rng, cfg.hand_payload);
  for (auto& c : ep.com_offset) c = draw(rng, cfg.com_displacement);
  ep.link_mass_scale = draw(rng, cfg.link_mass);
  ep.friction = draw(rng, cfg.friction);
  ep.restitution = draw(rng, cfg.restitution);
  return ep;
}

plant::Perturbation to_perturbation(const robot::RobotDescription& desc, const EpisodeRandomization& ep) {
  plant::Perturbation p;
  p.kp_scale = ep.kp_scale;
  p.kd_scale = ep.kd_scale;
  p.torque_offset = ep.actuation_offset;
  p.initial_q.resize(desc.n_joints());
  for (std::size_t j = 0; j < desc.n_joints(); ++j) {
    p.initial_q[j] = ep.init_pos_scale[j] * desc.joints[j].default_pos + ep.init_pos_offset[j];
  }
  // Hand payload applies to both hands.
  p.added_mass = ep.torso_payload + 2.0 * ep.hand_payload;
  p.link_mass_scale = ep.link_mass_scale;
  p.com_offset = ep.com_offset;
  p.friction = ep.friction;
  p.restitution = ep.restitution;
  return p;
}

obs::ObservationFrame noisy_observation(const obs::ObservationFrame& frame, const RandomizationConfig& cfg, Rng& rng) {
  obs::ObservationFrame out = frame;
  add_noise(out.values, frame.layout, cfg, rng);
  return out;
}

ObservationNoise::ObservationNoise(RandomizationConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(seed, RngStream::obs_noise) {
  cfg_.validate();
}

void ObservationNoise::new_episode(const obs::FrameLayout& layout) {
  bias_.clear();
  if (!cfg_.per_episode_obs_bias) return;
  bias_.assign(layout.size(), 0.0);
  add_noise(bias_, layout, cfg_, rng_);
}

obs::ObservationFrame ObservationNoise::apply(const obs::ObservationFrame& frame) {
  if (!cfg_.per_episode_obs_bias) return noisy_observation(frame, cfg_, rng_);
  if (bias_.size() != frame.values.size()) new_episode(frame.layout);
  obs::ObservationFrame out = frame;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += bias_[i];
  return out;
}

}  // namespace wbt::rand
