#include "wbt/session.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"
#include "wbt/controller.hpp"
#include "wbt/errors.hpp"

namespace wbt::gateway {

std::vector<double> default_upper(const robot::RobotDescription& desc) {
  std::vector<double> u(desc.n_upper());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = desc.joints[desc.upper_indices[k]].default_pos;
  return u;
}

Command clamp_command(const robot::RobotDescription& desc, const Command& c) noexcept {
  const auto& r = desc.cmd_ranges;
  return {r.lin_vel_x.clamp(c.v_x), r.ang_vel_yaw.clamp(c.yaw_rate), desc.height_command_range().clamp(c.height)};
}

// ---------------------------------------------------------------- Episode

Episode::Episode(EpisodeConfig cfg)
    : cfg_(std::move(cfg)),
      plant_rng_(cfg_.seed, RngStream::plant),
      noise_(cfg_.randomization, cfg_.seed),
      rewards_(*cfg_.desc, cfg_.reward) {
  const auto& desc = *cfg_.desc;
  plant::Perturbation pert = plant::Perturbation::identity(desc.n_joints());
  if (cfg_.randomize) {
    Rng r(cfg_.seed, RngStream::randomization);
    draws_ = rand::sample_episode(desc, cfg_.randomization, r);
    pert = rand::to_perturbation(desc, draws_);
    cfg_.plant.push_vel_range = cfg_.randomization.push_vel;
  }
  model_ = std::make_unique<plant::PlantModel>(cfg_.desc, cfg_.plant, std::move(pert));
  state_ = model_->initial_state();
  a_prev_ = state_.last_action;
  a_prev2_ = state_.last_action;
}

TickRecord Episode::tick(const Command& applied, const std::vector<double>& upper_targets, bool failsafe,
                         std::int64_t seq) {
  if (done_) throw Error("episode already terminated");
  const auto& desc = *cfg_.desc;
  if (upper_targets.size() != desc.n_upper()) throw ShapeError("episode: upper target count mismatch");

  const auto layout = obs::FrameLayout::of(desc);
  if (!stack_) {
    // Reward of the episode-start state, measured against itself.
    reward::RewardInputs in{&state_, &state_, applied, a_prev_, a_prev_, a_prev_, {}};
    last_reward_ = rewards_.step(in);
    noise_.new_episode(layout);
  }

  TickRecord rec;
  rec.tick = state_.tick;
  rec.t = state_.t;
  rec.cmd = applied;
  rec.upper_targets = upper_targets;
  rec.base_height = state_.base_height;
  rec.base_vel = state_.base_vel;
  rec.yaw_rate = state_.base_yaw_rate;
  rec.tilt = state_.tilt;
  rec.q = state_.q;
  rec.contact = {state_.feet[0].contact, state_.feet[1].contact};
  rec.reward = last_reward_.total;
  if (cfg_.record_terms) {
    rec.terms.reserve(reward::kTermCount);
    for (const auto& tv : last_reward_.terms) rec.terms.push_back(tv.weighted);
  }
  rec.failsafe = failsafe;
  rec.seq = seq;

  const auto status = plant::is_terminated(state_, model_->config());
  if (status.terminated) {
    rec.terminated = true;
    rec.reason = std::string(plant::to_string(status.reason));
    done_ = true;
    return rec;
  }

  auto frame = obs::assemble_frame(layout, applied, state_);
  if (cfg_.randomize) frame = noise_.apply(frame);
  if (!stack_) {
    stack_.emplace(frame);
  } else {
    stack_->push(frame);
  }

  auto action = control::scripted_action(desc, frame, upper_targets, model_->config().torque_law);
  RobotState next = plant::step(*model_, state_, action, plant_rng_);
  if (cfg_.perfect_tracking) {
    next.base_vel = {applied.v_x, 0.0, 0.0};
    next.base_yaw_rate = applied.yaw_rate;
    next.ang_vel = {0.0, 0.0, applied.yaw_rate};
    next.base_height = applied.height;
    next.tilt = {0.0, 0.0};
    next.tilt_rate = {0.0, 0.0};
  }

  std::vector<double> targets(desc.n_joints());
  const auto lower = control::leg_targets_for_height(desc, applied.height);
  for (std::size_t k = 0; k < desc.n_lower(); ++k) targets[desc.lower_indices[k]] = lower[k];
  for (std::size_t k = 0; k < desc.n_upper(); ++k) {
    targets[desc.upper_indices[k]] = desc.joints[desc.upper_indices[k]].limits().clamp(upper_targets[k]);
  }
  reward::RewardInputs in{&next, &state_, applied, action.lower_targets, a_prev_, a_prev2_, targets};
  last_reward_ = rewards_.step(in);
  a_prev2_ = std::move(a_prev_);
  a_prev_ = action.lower_targets;
  state_ = std::move(next);
  return rec;
}

// ---------------------------------------------------------------- packets

proto::Packet encode_command(const robot::RobotDescription& desc, std::uint32_t seq, const Command& c,
                             const std::vector<double>& upper) {
  if (upper.size() != desc.n_upper()) throw ShapeError("encode_command: upper target count mismatch");
  if (desc.arm_indices.size() <= proto::kArmSlots && desc.hand_indices.size() <= proto::kHandSlots) {
    std::vector<std::size_t> slot(desc.n_joints(), desc.n_joints());
    for (std::size_t k = 0; k < desc.n_upper(); ++k) slot[desc.upper_indices[k]] = k;
    proto::CommandPayload p;
    p.v_x = static_cast<float>(c.v_x);
    p.yaw_rate = static_cast<float>(c.yaw_rate);
    p.height = static_cast<float>(c.height);
    for (std::size_t i = 0; i < desc.arm_indices.size(); ++i) p.arm[i] = static_cast<float>(upper[slot[desc.arm_indices[i]]]);
    for (std::size_t i = 0; i < desc.hand_indices.size(); ++i) {
      p.hand[i] = static_cast<float>(upper[slot[desc.hand_indices[i]]]);
    }
    return proto::make_command(seq, p);
  }
  proto::CommandListPayload p;
  p.v_x = static_cast<float>(c.v_x);
  p.yaw_rate = static_cast<float>(c.yaw_rate);
  p.height = static_cast<float>(c.height);
  p.upper.reserve(upper.size());
  for (double v : upper) p.upper.push_back(static_cast<float>(v));
  return proto::make_command(seq, p);
}

std::optional<DecodedCommand> decode_command(const robot::RobotDescription& desc, const proto::Packet& p) {
  DecodedCommand out;
  out.upper = default_upper(desc);
  if (auto c = proto::read_command(p)) {
    if (desc.arm_indices.size() > proto::kArmSlots || desc.hand_indices.size() > proto::kHandSlots) return std::nullopt;
    std::vector<std::size_t> slot(desc.n_joints(), desc.n_joints());
    for (std::size_t k = 0; k < desc.n_upper(); ++k) slot[desc.upper_indices[k]] = k;
    out.cmd = {c->v_x, c->yaw_rate, c->height};
    for (std::size_t i = 0; i < desc.arm_indices.size(); ++i) out.upper[slot[desc.arm_indices[i]]] = c->arm[i];
    for (std::size_t i = 0; i < desc.hand_indices.size(); ++i) out.upper[slot[desc.hand_indices[i]]] = c->hand[i];
  } else if (auto l = proto::read_command_list(p)) {
    if (l->upper.size() != desc.n_upper()) return std::nullopt;
    out.cmd = {l->v_x, l->yaw_rate, l->height};
    for (std::size_t k = 0; k < out.upper.size(); ++k) out.upper[k] = l->upper[k];
  } else {
    return std::nullopt;
  }
  const bool finite = std::isfinite(out.cmd.v_x) && std::isfinite(out.cmd.yaw_rate) && std::isfinite(out.cmd.height) &&
                      std::all_of(out.upper.begin(), out.upper.end(), [](double v) { return std::isfinite(v); });
  if (!finite) return std::nullopt;
  return out;
}

proto::Packet make_state_packet(std::uint32_t seq, const TickRecord& r, std::uint32_t flags) {
  namespace s = proto::state_slot;
  std::array<float, proto::kPayloadFloats> v{};
  v[s::t] = static_cast<float>(r.t);
  v[s::base_height] = static_cast<float>(r.base_height);
  v[s::v_x] = static_cast<float>(r.base_vel[0]);
  v[s::v_y] = static_cast<float>(r.base_vel[1]);
  v[s::yaw_rate] = static_cast<float>(r.yaw_rate);
  v[s::roll] = static_cast<float>(r.tilt[0]);
  v[s::pitch] = static_cast<float>(r.tilt[1]);
  v[s::cmd_v_x] = static_cast<float>(r.cmd.v_x);
  v[s::cmd_yaw_rate] = static_cast<float>(r.cmd.yaw_rate);
  v[s::cmd_height] = static_cast<float>(r.cmd.height);
  v[s::reward] = static_cast<float>(r.reward);
  v[s::flags] = static_cast<float>(flags);
  v[s::last_seq] = static_cast<float>(r.seq < 0 ? -1 : r.seq);
  for (std::size_t i = 0; i < s::lower_q_count && i < r.q.size(); ++i) v[s::lower_q + i] = static_cast<float>(r.q[i]);
  return proto::make_state(seq, v);
}

// ---------------------------------------------------------------- config

int SessionConfig::interp_steps() const {
  return static_cast<int>(std::llround(control_hz() / command_hz));
}

void SessionConfig::validate() const {
  if (!episode.desc) throw ConfigError("session: no robot description");
  if (!(command_hz > 0.0) || !(max_seconds > 0.0)) throw ConfigError("session: rates and duration must be positive");
  const double ratio = control_hz() / command_hz;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
    throw ConfigError("session: control rate must be a whole multiple of the command rate");
  }
  if (!(heartbeat_timeout_ms > 0.0) || !(failsafe_decay_s > 0.0)) {
    throw ConfigError("session: heartbeat timeout and decay must be positive");
  }
  episode.plant.validate();
  transport.validate();
}

SessionConfig make_session_config(const std::string& robot, std::uint64_t seed, const std::filesystem::path& data_dir) {
  SessionConfig cfg;
  auto desc = std::make_shared<const robot::RobotDescription>(robot::load_robot(robot, data_dir));
  cfg.robot_name = robot;
  cfg.reward_preset = desc->name == "gr1" ? "gr1" : "g1";
  cfg.episode.plant = plant::PlantConfig::for_robot(*desc);
  cfg.episode.reward = reward::load_reward_preset(cfg.reward_preset, data_dir);
  cfg.episode.randomization = rand::load_default_randomization(data_dir);
  cfg.episode.desc = std::move(desc);
  cfg.episode.seed = seed;
  return cfg;
}

// ---------------------------------------------------------------- scripts

Script parse_script(std::string_view text) {
  const auto doc = detail::parse_json(text, "command script");
  detail::check_header(doc, "wbt-script", 1);
  Script s;
  s.command_hz = detail::optional<double>(doc, "command_hz", 10.0);
  if (!(s.command_hz > 0.0)) throw ConfigError("command script: command_hz must be positive");
  if (doc.contains("silent_after")) s.silent_after = doc.at("silent_after").get<double>();
  if (doc.contains("disconnect_at")) s.disconnect_at = doc.at("disconnect_at").get<double>();
  const auto& frames = detail::require<detail::json>(doc, "keyframes", "command script");
  double last_t = -1.0;
  for (const auto& f : frames) {
    Keyframe k;
    k.t = detail::require<double>(f, "t", "keyframe");
    if (k.t < last_t) throw ConfigError("command script: keyframes must be in time order");
    last_t = k.t;
    k.cmd = {detail::optional<double>(f, "v_x", 0.0), detail::optional<double>(f, "yaw_rate", 0.0),
             detail::require<double>(f, "height", "keyframe")};
    if (f.contains("upper")) {
      for (auto it = f.at("upper").begin(); it != f.at("upper").end(); ++it) k.upper[it.key()] = it->get<double>();
    }
    s.keyframes.push_back(std::move(k));
  }
  if (s.keyframes.empty()) throw ConfigError("command script: no keyframes");
  return s;
}

Script load_script(const std::filesystem::path& path) { return parse_script(detail::read_text_file(path)); }

ScriptedSource::ScriptedSource(const robot::RobotDescription& desc, Script script)
    : desc_(&desc), script_(std::move(script)) {
  for (const auto& k : script_.keyframes) {
    for (const auto& [name, v] : k.upper) {
      auto j = desc.find_joint(name);
      if (!j || !desc.joints[*j].is_upper()) throw ConfigError("command script: '" + name + "' is not an upper joint");
    }
  }
}

void ScriptedSource::on_tick(double now_ms, transport::SimulatedLink& up, const std::vector<proto::Packet>& states) {
  for (const auto& p : states) {
    const auto s = proto::read_state(p);
    if (!s) continue;
    const float echo = (*s)[proto::state_slot::last_seq];
    if (echo < 0.0F) continue;
    const auto seq = static_cast<std::uint32_t>(echo);
    if (seq > last_echo_ || rtt_.empty()) {
      if (auto it = sent_at_.find(seq); it != sent_at_.end()) rtt_.push_back(now_ms - it->second);
      last_echo_ = seq;
    }
  }
  const double t = now_ms / 1000.0;
  if (script_.disconnect_at && t >= *script_.disconnect_at) {
    up.close();
    return;
  }
  if (script_.silent_after && t >= *script_.silent_after) return;
  if (now_ms + 1e-9 < next_send_ms_) return;
  next_send_ms_ += 1000.0 / script_.command_hz;

  const Keyframe* cur = &script_.keyframes.front();
  for (const auto& k : script_.keyframes) {
    if (k.t <= t + 1e-12) cur = &k;
  }
  auto upper = default_upper(*desc_);
  for (std::size_t i = 0; i < desc_->n_upper(); ++i) {
    const auto& name = desc_->joints[desc_->upper_indices[i]].name;
    if (auto it = cur->upper.find(name); it != cur->upper.end()) upper[i] = it->second;
  }
  const std::uint32_t seq = ++seq_;
  sent_at_[seq] = now_ms;
  (void)up.send(proto::encode(encode_command(*desc_, seq, cur->cmd, upper)), now_ms);
}

// ---------------------------------------------------------------- gate

CommandGate::CommandGate(const robot::RobotDescription& desc, double timeout_ms, double decay_s)
    : desc_(&desc), timeout_ms_(timeout_ms), decay_ms_(decay_s * 1000.0) {}

bool CommandGate::offer(std::uint32_t seq, const DecodedCommand& cmd, double now_ms) {
  last_rx_ms_ = now_ms;
  if (static_cast<std::int64_t>(seq) <= seq_) return false;
  seq_ = seq;
  latest_ = cmd;
  fresh_ = true;
  return true;
}

CommandGate::Output CommandGate::current(double now_ms) {
  Output out;
  if (!latest_) {
    out.cmd = {0.0, 0.0, desc_->height_command_range().hi};
    out.upper = default_upper(*desc_);
    out.failsafe = true;
    return out;
  }
  out.cmd = clamp_command(*desc_, latest_->cmd);
  out.upper = latest_->upper;
  out.seq = seq_;
  out.fresh = fresh_;
  fresh_ = false;
  const double silent = now_ms - last_rx_ms_;
  if (silent > timeout_ms_) {
    const double scale = std::max(0.0, 1.0 - (silent - timeout_ms_) / decay_ms_);
    out.cmd.v_x *= scale;
    out.cmd.yaw_rate *= scale;
    out.failsafe = true;
  }
  return out;
}

// ---------------------------------------------------------------- session

ControlLoop::ControlLoop(const SessionConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      desc_(cfg_.episode.desc),
      episode_(cfg_.episode),
      gate_(*desc_, cfg_.heartbeat_timeout_ms, cfg_.failsafe_decay_s),
      n_interp_(cfg_.interp_steps()),
      ramp_from_(default_upper(*desc_)),
      ramp_to_(ramp_from_),
      emitted_(ramp_from_),
      ramp_step_(n_interp_) {}

void ControlLoop::ingest(std::span<const std::uint8_t> bytes, double now_ms) {
  ++stats_.packets_received;
  auto r = proto::decode(bytes);
  if (!r.ok()) {
    ++stats_.decode_errors;
    return;
  }
  if (r.packet->type == proto::PacketType::heartbeat) {
    gate_.heartbeat(now_ms);
  } else if (r.packet->type == proto::PacketType::command) {
    auto cmd = decode_command(*desc_, *r.packet);
    if (!cmd) {
      ++stats_.decode_errors;
    } else if (gate_.offer(r.packet->seq, *cmd, now_ms)) {
      ++stats_.commands_accepted;
    } else {
      ++stats_.stale_commands;
    }
  }
}

ControlLoop::Step ControlLoop::step(double now_ms) {
  const auto& desc = *desc_;
  auto out = gate_.current(now_ms);
  if (out.fresh) {
    ramp_from_ = emitted_;
    ramp_to_ = out.upper;
    for (std::size_t i = 0; i < ramp_to_.size(); ++i) {
      ramp_to_[i] = desc.joints[desc.upper_indices[i]].limits().clamp(ramp_to_[i]);
    }
    ramp_step_ = 0;
  }
  if (ramp_step_ < n_interp_) ++ramp_step_;
  emitted_ = plant::interpolate_upper(ramp_from_, ramp_to_, ramp_step_, n_interp_);

  Step st;
  st.record = episode_.tick(out.cmd, emitted_, out.failsafe, out.seq);
  digest_.add(st.record);
  std::uint32_t flags = 0;
  if (st.record.terminated) flags |= proto::kFlagTerminated;
  if (st.record.failsafe) flags |= proto::kFlagFailsafe;
  st.state = make_state_packet(++state_seq_, st.record, flags);
  return st;
}

SessionResult run_session(const SessionConfig& cfg, CommandSource& source, const RecordSink& sink) {
  ControlLoop loop(cfg);
  transport::Channel channel(cfg.transport, cfg.episode.seed);
  const auto cap_ticks = static_cast<std::int64_t>(std::llround(cfg.max_seconds * cfg.control_hz()));

  SessionResult result;
  for (std::int64_t k = 0; k < cap_ticks; ++k) {
    const double now_ms = static_cast<double>(k) * 1000.0 / cfg.control_hz();
    try {
      std::vector<proto::Packet> states;
      for (auto& d : channel.down.receive_all(now_ms)) {
        auto r = proto::decode(d.bytes);
        if (r.ok()) states.push_back(std::move(*r.packet));
      }
      source.on_tick(now_ms, channel.up, states);
      for (auto& d : channel.up.receive_all(now_ms)) loop.ingest(d.bytes, now_ms);
    } catch (const Disconnected&) {
      result.disconnected = true;
      break;
    }

    auto st = loop.step(now_ms);
    if (!channel.down.closed()) (void)channel.down.send(proto::encode(st.state), now_ms);
    if (sink) sink(st.record);
    result.records.push_back(std::move(st.record));
    if (loop.done()) break;
  }
  result.stats = loop.stats();
  result.stats.dropped_up = channel.up.dropped();
  result.terminated = !result.records.empty() && result.records.back().terminated;
  result.living_time = result.terminated ? result.records.back().t : cfg.max_seconds;
  if (result.disconnected && !result.records.empty()) result.living_time = result.records.back().t;
  result.digest = loop.digest();
  return result;
}

}  // namespace wbt::gateway
