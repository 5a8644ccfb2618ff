#pragma once

// JSON text mirror of the binary packets for browser clients. Each command
// and state message carries the packet fields one for one, so a packet
// survives packet -> text -> packet bit for bit.

#include <optional>
#include <string>
#include <string_view>

#include "wbt/packet.hpp"
#include "wbt/robot_model.hpp"

namespace wbt::textproto {

enum class Kind { hello, command, heartbeat, record, unknown };

struct ClientMessage {
  Kind kind{Kind::unknown};
  std::optional<proto::Packet> packet;  // command or heartbeat
  std::optional<double> sent_ms;        // client timestamp, echoed back in state
  bool record_on{false};
  std::string error;                    // non-empty when the message was rejected
};

/// Never throws; malformed input yields kind unknown with `error` set.
[[nodiscard]] ClientMessage parse_client_message(std::string_view text);

/// Packet -> text. Command (v1 or v2), state and heartbeat packets.
[[nodiscard]] std::string to_text(const proto::Packet& p, std::optional<double> echo_sent_ms = std::nullopt);

/// Server greeting: robot name, joint limits, command ranges, state rate.
[[nodiscard]] std::string handshake(const robot::RobotDescription& desc, double state_hz);
[[nodiscard]] std::string record_ack(bool on, std::string_view path);
[[nodiscard]] std::string error_message(std::string_view what);

}  // namespace wbt::textproto
