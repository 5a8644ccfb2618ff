#pragma once

// Gateway session: cockpit packets in, clamped commands through the scripted
// controller and surrogate plant, state packets and tick records out.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wbt/digest.hpp"
#include "wbt/observation.hpp"
#include "wbt/packet.hpp"
#include "wbt/plant.hpp"
#include "wbt/randomization.hpp"
#include "wbt/reward.hpp"
#include "wbt/robot_model.hpp"
#include "wbt/transport.hpp"

namespace wbt::gateway {

struct TickRecord {
  std::int64_t tick{0};
  double t{0.0};
  Command cmd{};                      // command applied this tick, after clamping
  std::vector<double> upper_targets;  // upper order, after interpolation
  double base_height{0.0};
  Vec3 base_vel{};
  double yaw_rate{0.0};
  std::array<double, 2> tilt{};
  std::vector<double> q;
  std::array<bool, 2> contact{};
  double reward{0.0};                 // total for the transition into this state
  std::vector<double> terms;          // weighted terms, empty unless requested
  bool terminated{false};
  std::string reason;                 // termination reason, empty when alive
  bool failsafe{false};
  std::int64_t seq{-1};               // last accepted command seq, -1 before any
};

struct EpisodeConfig {
  std::shared_ptr<const robot::RobotDescription> desc;
  plant::PlantConfig plant;
  reward::RewardConfig reward;
  rand::RandomizationConfig randomization;
  bool randomize{false};         // per-episode physical draws and observation noise
  bool perfect_tracking{false};  // stub plant: the base follows the command exactly
  bool record_terms{false};
  std::uint64_t seed{0};
};

/// Control core shared by live sessions, replay and batch evaluation.
class Episode {
 public:
  explicit Episode(EpisodeConfig cfg);

  /// Builds the record for the current tick, then (unless the state is
  /// terminal) computes the action and advances the plant one tick.
  TickRecord tick(const Command& applied, const std::vector<double>& upper_targets, bool failsafe = false,
                  std::int64_t seq = -1);

  [[nodiscard]] bool done() const noexcept { return done_; }
  [[nodiscard]] const RobotState& state() const noexcept { return state_; }
  [[nodiscard]] const obs::ObservationStack& history() const noexcept { return *stack_; }
  [[nodiscard]] const EpisodeConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const rand::EpisodeRandomization& draws() const noexcept { return draws_; }
  [[nodiscard]] const reward::RewardBreakdown& last_reward() const noexcept { return last_reward_; }

 private:
  EpisodeConfig cfg_;
  rand::EpisodeRandomization draws_;
  std::unique_ptr<plant::PlantModel> model_;
  Rng plant_rng_;
  rand::ObservationNoise noise_;
  reward::RewardTracker rewards_;
  RobotState state_;
  std::optional<obs::ObservationStack> stack_;
  std::vector<double> a_prev_;
  std::vector<double> a_prev2_;
  reward::RewardBreakdown last_reward_{};
  bool done_{false};
};

/// Upper targets at their defaults, upper order.
[[nodiscard]] std::vector<double> default_upper(const robot::RobotDescription& desc);

/// Command clamped into the robot's velocity ranges and height command range.
[[nodiscard]] Command clamp_command(const robot::RobotDescription& desc, const Command& c) noexcept;

/// Packs a command for this robot: version 1 when arms and hands fit the fixed
/// 14 + 14 slots, version 2 otherwise. Waist joints ride only in version 2.
[[nodiscard]] proto::Packet encode_command(const robot::RobotDescription& desc, std::uint32_t seq, const Command& c,
                                           const std::vector<double>& upper);

struct DecodedCommand {
  Command cmd;
  std::vector<double> upper;  // upper order; joints the packet does not carry keep defaults
};

[[nodiscard]] std::optional<DecodedCommand> decode_command(const robot::RobotDescription& desc,
                                                           const proto::Packet& p);

[[nodiscard]] proto::Packet make_state_packet(std::uint32_t seq, const TickRecord& r, std::uint32_t flags);

struct SessionConfig {
  EpisodeConfig episode;
  std::string robot_name{"g1"};
  std::string reward_preset{"g1"};
  transport::TransportConfig transport;
  double command_hz{10.0};
  double heartbeat_timeout_ms{500.0};
  double failsafe_decay_s{0.5};
  double max_seconds{20.0};

  [[nodiscard]] double control_hz() const noexcept { return episode.plant.control_hz; }
  [[nodiscard]] int interp_steps() const;

  /// Throws ConfigError unless control_hz is a whole multiple of command_hz.
  void validate() const;
};

/// Builds a config from preset names with default plant/reward/transport.
[[nodiscard]] SessionConfig make_session_config(const std::string& robot, std::uint64_t seed,
                                                const std::filesystem::path& data_dir = robot::default_data_dir());

/// Cockpit side of a simulated session. Called once per control tick with
/// the state packets that have arrived; sends through `up`.
class CommandSource {
 public:
  virtual ~CommandSource() = default;
  virtual void on_tick(double now_ms, transport::SimulatedLink& up, const std::vector<proto::Packet>& states) = 0;
};

struct Keyframe {
  double t{0.0};
  Command cmd{};
  std::map<std::string, double> upper;  // joint name -> target
};

/// Time-keyed command script (see RECORDS.md for the file format).
struct Script {
  double command_hz{10.0};
  std::vector<Keyframe> keyframes;
  std::optional<double> silent_after;     // s; stop sending from here on
  std::optional<double> disconnect_at;    // s; close the link
};

[[nodiscard]] Script parse_script(std::string_view text);
[[nodiscard]] Script load_script(const std::filesystem::path& path);

/// Sends the latest keyframe at the script's command rate and measures
/// command-to-state round trips from the echoed sequence number.
class ScriptedSource : public CommandSource {
 public:
  ScriptedSource(const robot::RobotDescription& desc, Script script);

  void on_tick(double now_ms, transport::SimulatedLink& up, const std::vector<proto::Packet>& states) override;

  [[nodiscard]] const std::vector<double>& round_trips_ms() const noexcept { return rtt_; }

 private:
  const robot::RobotDescription* desc_;
  Script script_;
  double next_send_ms_{0.0};
  std::uint32_t seq_{0};
  std::map<std::uint32_t, double> sent_at_;
  std::uint32_t last_echo_{0};
  std::vector<double> rtt_;
};

/// Never sends anything.
class SilentSource : public CommandSource {
 public:
  void on_tick(double, transport::SimulatedLink&, const std::vector<proto::Packet>&) override {}
};

struct SessionStats {
  std::uint64_t packets_received{0};
  std::uint64_t commands_accepted{0};
  std::uint64_t stale_commands{0};
  std::uint64_t decode_errors{0};
  std::uint64_t dropped_up{0};
};

struct SessionResult {
  std::vector<TickRecord> records;
  bool terminated{false};
  bool disconnected{false};
  double living_time{0.0};
  std::uint64_t digest{0};
  SessionStats stats;
};

using RecordSink = std::function<void(const TickRecord&)>;

/// Runs one session on the virtual clock until termination, disconnect or
/// max_seconds. Each record is also passed to `sink` when given.
[[nodiscard]] SessionResult run_session(const SessionConfig& cfg, CommandSource& source, const RecordSink& sink = {});

/// Latest-command gate: accepts newer sequence numbers only and applies the
/// heartbeat failsafe (v and yaw rate decay linearly to zero).
class CommandGate {
 public:
  CommandGate(const robot::RobotDescription& desc, double timeout_ms, double decay_s);

  /// Returns true when the command was newer than the last accepted one.
  bool offer(std::uint32_t seq, const DecodedCommand& cmd, double now_ms);
  void heartbeat(double now_ms) noexcept { last_rx_ms_ = now_ms; }

  struct Output {
    Command cmd;
    std::vector<double> upper;
    bool failsafe{false};
    bool fresh{false};  // a new command arrived since the last call
    std::int64_t seq{-1};
  };
  Output current(double now_ms);

 private:
  const robot::RobotDescription* desc_;
  double timeout_ms_;
  double decay_ms_;
  std::optional<DecodedCommand> latest_;
  std::int64_t seq_{-1};
  double last_rx_ms_{0.0};
  bool fresh_{false};
};

/// One control tick at a time: packet bytes in, clamped and interpolated
/// command through the episode, record and state packet out. Shared by the
/// virtual-clock session and the live server.
class ControlLoop {
 public:
  /// Throws ConfigError when cfg.validate() fails.
  explicit ControlLoop(const SessionConfig& cfg);

  /// Decodes one framed packet; bad frames and stale commands only count.
  void ingest(std::span<const std::uint8_t> bytes, double now_ms);

  struct Step {
    TickRecord record;
    proto::Packet state;
  };
  Step step(double now_ms);

  [[nodiscard]] bool done() const noexcept { return episode_.done(); }
  [[nodiscard]] const SessionStats& stats() const noexcept { return stats_; }
  [[nodiscard]] std::uint64_t digest() const noexcept { return digest_.value(); }
  [[nodiscard]] const SessionConfig& config() const noexcept { return cfg_; }

 private:
  SessionConfig cfg_;
  std::shared_ptr<const robot::RobotDescription> desc_;
  Episode episode_;
  CommandGate gate_;
  records::Digest digest_;
  SessionStats stats_;
  int n_interp_;
  std::vector<double> ramp_from_;
  std::vector<double> ramp_to_;
  std::vector<double> emitted_;
  int ramp_step_;
  std::uint32_t state_seq_{0};
};

}  // namespace wbt::gateway
