#pragma once

// Framed binary cockpit protocol. See PROTOCOL.md for the byte layout.
//
//   off  size  field
//   0    2     magic 0x48 0x4D
//   2    1     version (1 fixed layout, 2 length-prefixed joint list)
//   3    1     type (1 command, 2 state, 3 heartbeat)
//   4    4     seq, u32 little-endian
//   8    2     payload_len, u16 little-endian
//   10   n     payload
//   10+n 4     CRC-32 (IEEE) of bytes [0, 10+n), little-endian

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace wbt::proto {

inline constexpr std::uint8_t kMagic0 = 0x48;
inline constexpr std::uint8_t kMagic1 = 0x4D;
inline constexpr std::uint8_t kVersionFixed = 1;
inline constexpr std::uint8_t kVersionList = 2;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::size_t kCrcSize = 4;
inline constexpr std::size_t kPayloadFloats = 32;
inline constexpr std::size_t kPayloadBytes = kPayloadFloats * 4;  // 128
inline constexpr std::size_t kArmSlots = 14;
inline constexpr std::size_t kHandSlots = 14;

enum class PacketType : std::uint8_t { command = 1, state = 2, heartbeat = 3 };

enum class DecodeError {
  none,
  BadLength,   // shorter than header + CRC, or payload_len disagrees with the frame
  BadCrc,
  BadMagic,
  BadVersion,
  BadType,
};

[[nodiscard]] std::string_view to_string(DecodeError e) noexcept;
[[nodiscard]] std::string_view to_string(PacketType t) noexcept;

/// CRC-32, reflected IEEE polynomial 0xEDB88320, init and xorout 0xFFFFFFFF.
[[nodiscard]] std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept;

struct Packet {
  std::uint8_t version{kVersionFixed};
  PacketType type{PacketType::command};
  std::uint32_t seq{0};
  std::vector<std::uint8_t> payload;  // raw little-endian bytes; equality is bitwise

  friend bool operator==(const Packet&, const Packet&) = default;
};

/// Throws std::length_error when the payload exceeds 65535 bytes.
[[nodiscard]] std::vector<std::uint8_t> encode(const Packet& p);

struct DecodeResult {
  std::optional<Packet> packet;
  DecodeError error{DecodeError::none};

  [[nodiscard]] bool ok() const noexcept { return error == DecodeError::none; }
};

/// Checks the CRC over the whole frame first, then magic, version, type and
/// the payload length expected for that type and version.
[[nodiscard]] DecodeResult decode(std::span<const std::uint8_t> frame);

// Float payload helpers (IEEE-754 binary32, little-endian).
void put_f32(std::vector<std::uint8_t>& out, float v);
[[nodiscard]] float get_f32(std::span<const std::uint8_t> in, std::size_t offset);

/// Version-1 command payload: [v_x, yaw_rate, height, 14 arm, 14 hand, reserved].
struct CommandPayload {
  float v_x{0.0F};
  float yaw_rate{0.0F};
  float height{0.0F};
  std::array<float, kArmSlots> arm{};
  std::array<float, kHandSlots> hand{};
  float reserved{0.0F};
};

/// Version-2 command payload: [v_x, yaw_rate, height, u16 count, count floats].
struct CommandListPayload {
  float v_x{0.0F};
  float yaw_rate{0.0F};
  float height{0.0F};
  std::vector<float> upper;
};

[[nodiscard]] Packet make_command(std::uint32_t seq, const CommandPayload& c);
[[nodiscard]] Packet make_command(std::uint32_t seq, const CommandListPayload& c);
[[nodiscard]] Packet make_heartbeat(std::uint32_t seq);

/// nullopt unless the packet is a command of the matching version.
[[nodiscard]] std::optional<CommandPayload> read_command(const Packet& p);
[[nodiscard]] std::optional<CommandListPayload> read_command_list(const Packet& p);

/// State payload slots (32 floats).
namespace state_slot {
inline constexpr std::size_t t = 0;
inline constexpr std::size_t base_height = 1;
inline constexpr std::size_t v_x = 2;
inline constexpr std::size_t v_y = 3;
inline constexpr std::size_t yaw_rate = 4;
inline constexpr std::size_t roll = 5;
inline constexpr std::size_t pitch = 6;
inline constexpr std::size_t cmd_v_x = 7;
inline constexpr std::size_t cmd_yaw_rate = 8;
inline constexpr std::size_t cmd_height = 9;
inline constexpr std::size_t reward = 10;
inline constexpr std::size_t flags = 11;     // bit0 terminated, bit1 failsafe
inline constexpr std::size_t last_seq = 12;
inline constexpr std::size_t lower_q = 13;   // 12 slots
inline constexpr std::size_t lower_q_count = 12;
}  // namespace state_slot

inline constexpr std::uint32_t kFlagTerminated = 1U;
inline constexpr std::uint32_t kFlagFailsafe = 2U;

[[nodiscard]] Packet make_state(std::uint32_t seq, const std::array<float, kPayloadFloats>& slots);
[[nodiscard]] std::optional<std::array<float, kPayloadFloats>> read_state(const Packet& p);

/// Hex dump helpers for packet-inspect.
[[nodiscard]] std::vector<std::uint8_t> parse_hex(std::string_view text);
[[nodiscard]] std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace wbt::proto
