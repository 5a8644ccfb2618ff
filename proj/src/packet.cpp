#include "wbt/packet.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <stdexcept>
#include <string>

#include "wbt/errors.hpp"

namespace wbt::proto {

namespace {

constexpr std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> t{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1U) ? 0xEDB88320U ^ (c >> 1) : c >> 1;
    t[i] = c;
  }
  return t;
}

constexpr auto kCrcTable = make_crc_table();

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(std::span<const std::uint8_t> in, std::size_t off) {
  return static_cast<std::uint16_t>(in[off] | (in[off + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

bool length_ok(std::uint8_t version, PacketType type, std::span<const std::uint8_t> payload) {
  switch (type) {
    case PacketType::heartbeat:
      return payload.empty();
    case PacketType::state:
      return payload.size() == kPayloadBytes;
    case PacketType::command:
      if (version == kVersionFixed) return payload.size() == kPayloadBytes;
      if (payload.size() < 14) return false;
      return payload.size() == 14 + 4 * static_cast<std::size_t>(get_u16(payload, 12));
  }
  return false;
}

}  // namespace

std::string_view to_string(DecodeError e) noexcept {
  switch (e) {
    case DecodeError::none: return "ok";
    case DecodeError::BadLength: return "BadLength";
    case DecodeError::BadCrc: return "BadCrc";
    case DecodeError::BadMagic: return "BadMagic";
    case DecodeError::BadVersion: return "BadVersion";
    case DecodeError::BadType: return "BadType";
  }
  return "?";
}

std::string_view to_string(PacketType t) noexcept {
  switch (t) {
    case PacketType::command: return "command";
    case PacketType::state: return "state";
    case PacketType::heartbeat: return "heartbeat";
  }
  return "?";
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept {
  std::uint32_t c = 0xFFFFFFFFU;
  for (std::uint8_t b : bytes) c = kCrcTable[(c ^ b) & 0xFFU] ^ (c >> 8);
  return c ^ 0xFFFFFFFFU;
}

std::vector<std::uint8_t> encode(const Packet& p) {
  if (p.payload.size() > 0xFFFF) throw std::length_error("packet payload exceeds 65535 bytes");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + p.payload.size() + kCrcSize);
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  out.push_back(p.version);
  out.push_back(static_cast<std::uint8_t>(p.type));
  put_u32(out, p.seq);
  put_u16(out, static_cast<std::uint16_t>(p.payload.size()));
  out.insert(out.end(), p.payload.begin(), p.payload.end());
  put_u32(out, crc32(out));
  return out;
}

DecodeResult decode(std::span<const std::uint8_t> frame) {
  if (frame.size() < kHeaderSize + kCrcSize) return {std::nullopt, DecodeError::BadLength};
  const std::size_t body = frame.size() - kCrcSize;
  if (crc32(frame.first(body)) != get_u32(frame, body)) return {std::nullopt, DecodeError::BadCrc};
  if (frame[0] != kMagic0 || frame[1] != kMagic1) return {std::nullopt, DecodeError::BadMagic};
  const std::uint8_t version = frame[2];
  if (version != kVersionFixed && version != kVersionList) return {std::nullopt, DecodeError::BadVersion};
  const std::uint8_t type = frame[3];
  if (type < 1 || type > 3) return {std::nullopt, DecodeError::BadType};
  const std::uint16_t len = get_u16(frame, 8);
  if (kHeaderSize + len != body) return {std::nullopt, DecodeError::BadLength};
  const auto payload = frame.subspan(kHeaderSize, len);
  const auto ptype = static_cast<PacketType>(type);
  if (!length_ok(version, ptype, payload)) return {std::nullopt, DecodeError::BadLength};

  Packet p;
  p.version = version;
  p.type = ptype;
  p.seq = get_u32(frame, 4);
  p.payload.assign(payload.begin(), payload.end());
  return {std::move(p), DecodeError::none};
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

float get_f32(std::span<const std::uint8_t> in, std::size_t offset) {
  return std::bit_cast<float>(get_u32(in, offset));
}

Packet make_command(std::uint32_t seq, const CommandPayload& c) {
  Packet p{kVersionFixed, PacketType::command, seq, {}};
  p.payload.reserve(kPayloadBytes);
  put_f32(p.payload, c.v_x);
  put_f32(p.payload, c.yaw_rate);
  put_f32(p.payload, c.height);
  for (float v : c.arm) put_f32(p.payload, v);
  for (float v : c.hand) put_f32(p.payload, v);
  put_f32(p.payload, c.reserved);
  return p;
}

Packet make_command(std::uint32_t seq, const CommandListPayload& c) {
  if (c.upper.size() > 0x3FFF) throw std::length_error("too many joints for one packet");
  Packet p{kVersionList, PacketType::command, seq, {}};
  put_f32(p.payload, c.v_x);
  put_f32(p.payload, c.yaw_rate);
  put_f32(p.payload, c.height);
  put_u16(p.payload, static_cast<std::uint16_t>(c.upper.size()));
  for (float v : c.upper) put_f32(p.payload, v);
  return p;
}

Packet make_heartbeat(std::uint32_t seq) { return {kVersionFixed, PacketType::heartbeat, seq, {}}; }

std::optional<CommandPayload> read_command(const Packet& p) {
  if (p.type != PacketType::command || p.version != kVersionFixed || p.payload.size() != kPayloadBytes) {
    return std::nullopt;
  }
  const std::span<const std::uint8_t> b(p.payload);
  CommandPayload c;
  c.v_x = get_f32(b, 0);
  c.yaw_rate = get_f32(b, 4);
  c.height = get_f32(b, 8);
  for (std::size_t i = 0; i < kArmSlots; ++i) c.arm[i] = get_f32(b, 12 + 4 * i);
  for (std::size_t i = 0; i < kHandSlots; ++i) c.hand[i] = get_f32(b, 12 + 4 * (kArmSlots + i));
  c.reserved = get_f32(b, kPayloadBytes - 4);
  return c;
}

std::optional<CommandListPayload> read_command_list(const Packet& p) {
  if (p.type != PacketType::command || p.version != kVersionList || !length_ok(p.version, p.type, p.payload)) {
    return std::nullopt;
  }
  const std::span<const std::uint8_t> b(p.payload);
  CommandListPayload c;
  c.v_x = get_f32(b, 0);
  c.yaw_rate = get_f32(b, 4);
  c.height = get_f32(b, 8);
  c.upper.resize(get_u16(b, 12));
  for (std::size_t i = 0; i < c.upper.size(); ++i) c.upper[i] = get_f32(b, 14 + 4 * i);
  return c;
}

Packet make_state(std::uint32_t seq, const std::array<float, kPayloadFloats>& slots) {
  Packet p{kVersionFixed, PacketType::state, seq, {}};
  p.payload.reserve(kPayloadBytes);
  for (float v : slots) put_f32(p.payload, v);
  return p;
}

std::optional<std::array<float, kPayloadFloats>> read_state(const Packet& p) {
  if (p.type != PacketType::state || p.payload.size() != kPayloadBytes) return std::nullopt;
  std::array<float, kPayloadFloats> s{};
  for (std::size_t i = 0; i < kPayloadFloats; ++i) s[i] = get_f32(p.payload, 4 * i);
  return s;
}

std::vector<std::uint8_t> parse_hex(std::string_view text) {
  std::vector<std::uint8_t> out;
  int high = -1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',' || ch == ':') continue;
    if (ch == '0' && i + 1 < text.size() && (text[i + 1] == 'x' || text[i + 1] == 'X')) {
      ++i;
      continue;
    }
    int v = -1;
    if (ch >= '0' && ch <= '9') v = ch - '0';
    if (ch >= 'a' && ch <= 'f') v = ch - 'a' + 10;
    if (ch >= 'A' && ch <= 'F') v = ch - 'A' + 10;
    if (v < 0) throw ConfigError(std::string("hex: unexpected character '") + ch + "'");
    if (high < 0) {
      high = v;
    } else {
      out.push_back(static_cast<std::uint8_t>((high << 4) | v));
      high = -1;
    }
  }
  if (high >= 0) throw ConfigError("hex: odd number of digits");
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 3);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i > 0) s.push_back(i % 16 == 0 ? '\n' : ' ');
    s.push_back(kDigits[bytes[i] >> 4]);
    s.push_back(kDigits[bytes[i] & 0xF]);
  }
  return s;
}

}  // namespace wbt::proto
