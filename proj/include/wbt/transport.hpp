#pragma once

// Latency-simulating message link. Time is passed in explicitly (ms), so the
// same code runs on the virtual clock in tests and the wall clock live.

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "wbt/rng.hpp"

namespace wbt::transport {

struct TransportConfig {
  double latency_ms{16.0};
  double jitter_ms{0.0};  // standard deviation
  double drop_prob{0.0};

  /// Throws ConfigError on negative latency/jitter or drop_prob outside [0, 1].
  void validate() const;
};

struct Delivery {
  double sent_ms{0.0};
  double deliver_ms{0.0};
  std::vector<std::uint8_t> bytes;
};

/// One direction, single producer / single consumer. Delays never reorder:
/// a message is never delivered before the one sent ahead of it.
class SimulatedLink {
 public:
  SimulatedLink(TransportConfig cfg, std::uint64_t seed, RngStream stream);

  /// Returns false when the message was dropped. Throws Disconnected once closed.
  bool send(std::vector<std::uint8_t> bytes, double now_ms);

  /// Oldest message due at `now_ms`. Throws Disconnected when closed and drained.
  std::optional<Delivery> receive(double now_ms);
  std::vector<Delivery> receive_all(double now_ms);

  void close() noexcept { closed_ = true; }
  [[nodiscard]] bool closed() const noexcept { return closed_; }
  [[nodiscard]] std::size_t in_flight() const noexcept { return queue_.size(); }
  [[nodiscard]] std::uint64_t sent() const noexcept { return sent_; }
  [[nodiscard]] std::uint64_t dropped() const noexcept { return dropped_; }
  [[nodiscard]] const TransportConfig& config() const noexcept { return cfg_; }

 private:
  TransportConfig cfg_;
  Rng rng_;
  std::deque<Delivery> queue_;
  double last_deliver_ms_{0.0};
  std::uint64_t sent_{0};
  std::uint64_t dropped_{0};
  bool closed_{false};
};

/// Both directions of a cockpit connection.
struct Channel {
  SimulatedLink up;    // cockpit -> robot
  SimulatedLink down;  // robot -> cockpit

  Channel(const TransportConfig& cfg, std::uint64_t seed)
      : up(cfg, seed, RngStream::transport_up), down(cfg, seed, RngStream::transport_down) {}

  void close() noexcept {
    up.close();
    down.close();
  }
};

/// Monotonic wall clock in ms, for live mode.
[[nodiscard]] double wall_clock_ms() noexcept;

}  // namespace wbt::transport
