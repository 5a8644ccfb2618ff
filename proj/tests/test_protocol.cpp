#include <doctest.h>

#include <zlib.h>

#include <bit>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "support.hpp"
#include "wbt/errors.hpp"
#include "wbt/packet.hpp"
#include "wbt/text_protocol.hpp"
#include "wbt/transport.hpp"

using namespace wbt;
using proto::DecodeError;
using proto::Packet;
using proto::PacketType;

namespace {

std::uint32_t zlib_crc(std::span<const std::uint8_t> b) {
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), b.data(), static_cast<uInt>(b.size())));
}

float random_float(Rng& rng) { return std::bit_cast<float>(static_cast<std::uint32_t>(rng.bits())); }

float finite_float(Rng& rng) {
  float f;
  do {
    f = random_float(rng);
  } while (!std::isfinite(f));
  return f;
}

Packet random_packet(Rng& rng) {
  const auto seq = static_cast<std::uint32_t>(rng.bits());
  switch (rng.bits() % 4) {
    case 0: {
      proto::CommandPayload c;
      c.v_x = random_float(rng);
      c.yaw_rate = random_float(rng);
      c.height = random_float(rng);
      for (auto& v : c.arm) v = random_float(rng);
      for (auto& v : c.hand) v = random_float(rng);
      c.reserved = random_float(rng);
      return proto::make_command(seq, c);
    }
    case 1: {
      proto::CommandListPayload c{random_float(rng), random_float(rng), random_float(rng), {}};
      c.upper.resize(rng.bits() % 64);
      for (auto& v : c.upper) v = random_float(rng);
      return proto::make_command(seq, c);
    }
    case 2: {
      std::array<float, proto::kPayloadFloats> s{};
      for (auto& v : s) v = random_float(rng);
      return proto::make_state(seq, s);
    }
    default:
      return proto::make_heartbeat(seq);
  }
}

std::vector<std::uint8_t> reframe(std::vector<std::uint8_t> frame) {
  const auto body = frame.size() - 4;
  const auto c = proto::crc32(std::span(frame).first(body));
  for (int i = 0; i < 4; ++i) frame[body + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(c >> (8 * i));
  return frame;
}

}  // namespace

TEST_CASE("crc check value and agreement with zlib") {
  const std::string check = "123456789";
  const std::vector<std::uint8_t> bytes(check.begin(), check.end());
  CHECK(proto::crc32(bytes) == 0xCBF43926U);
  CHECK(zlib_crc(bytes) == 0xCBF43926U);
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::uint8_t> b(rng.bits() % 300);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng.bits());
    CHECK(proto::crc32(b) == zlib_crc(b));
  }
}

TEST_CASE("zero command frame") {
  const auto frame = proto::encode(proto::make_command(0, proto::CommandPayload{}));
  REQUIRE(frame.size() == 142);
  CHECK(frame[0] == 0x48);
  CHECK(frame[1] == 0x4D);
  CHECK(frame[8] == 128);
  CHECK(frame[9] == 0);
  const auto crc = std::uint32_t{frame[138]} | std::uint32_t{frame[139]} << 8 | std::uint32_t{frame[140]} << 16 |
                   std::uint32_t{frame[141]} << 24;
  CHECK(crc == zlib_crc(std::span(frame).first(138)));
  CHECK(crc == 0x5BE66C2BU);
}

TEST_CASE("command payload is 128 bytes in the documented order") {
  proto::CommandPayload c;
  c.v_x = 0.5F;
  c.yaw_rate = -0.25F;
  c.height = 0.7F;
  c.arm[13] = 1.5F;
  c.hand[0] = 2.0F;
  c.reserved = 3.0F;
  const auto p = proto::make_command(7, c);
  REQUIRE(p.payload.size() == 128);
  CHECK(proto::get_f32(p.payload, 0) == 0.5F);
  CHECK(proto::get_f32(p.payload, 8) == 0.7F);
  CHECK(proto::get_f32(p.payload, 4 * 16) == 1.5F);
  CHECK(proto::get_f32(p.payload, 4 * 17) == 2.0F);
  CHECK(proto::get_f32(p.payload, 4 * 31) == 3.0F);
  const auto back = proto::read_command(p);
  REQUIRE(back);
  CHECK(back->arm[13] == 1.5F);
  CHECK_FALSE(proto::read_command_list(p));
}

TEST_CASE("fuzzed round trips are bit exact") {
  Rng rng(2);
  for (int i = 0; i < 100000; ++i) {
    const auto p = random_packet(rng);
    const auto r = proto::decode(proto::encode(p));
    REQUIRE(r.ok());
    REQUIRE(*r.packet == p);
  }
}

TEST_CASE("every single-bit flip is a BadCrc") {
  proto::CommandPayload c;
  c.v_x = 0.6F;
  c.height = 0.74F;
  const auto frame = proto::encode(proto::make_command(42, c));
  std::size_t detected = 0;
  for (std::size_t bit = 0; bit < frame.size() * 8; ++bit) {
    auto f = frame;
    f[bit / 8] ^= static_cast<std::uint8_t>(1U << (bit % 8));
    if (proto::decode(f).error == DecodeError::BadCrc) ++detected;
  }
  CHECK(detected == frame.size() * 8);
}

TEST_CASE("decode errors are distinguishable") {
  const auto good = proto::encode(proto::make_command(1, proto::CommandPayload{}));
  CHECK(proto::decode(std::span(good).first(12)).error == DecodeError::BadLength);

  auto f = good;
  f[0] = 0x47;
  CHECK(proto::decode(reframe(f)).error == DecodeError::BadMagic);
  f = good;
  f[2] = 9;
  CHECK(proto::decode(reframe(f)).error == DecodeError::BadVersion);
  f = good;
  f[3] = 7;
  CHECK(proto::decode(reframe(f)).error == DecodeError::BadType);
  f = good;
  f[8] = 127;
  CHECK(proto::decode(reframe(f)).error == DecodeError::BadLength);

  // A well-framed command with a 124-byte payload.
  Packet shortp{1, PacketType::command, 3, std::vector<std::uint8_t>(124)};
  CHECK(proto::decode(proto::encode(shortp)).error == DecodeError::BadLength);

  for (auto e : {DecodeError::BadLength, DecodeError::BadCrc, DecodeError::BadMagic, DecodeError::BadVersion,
                 DecodeError::BadType}) {
    CHECK(proto::to_string(e) != proto::to_string(DecodeError::none));
  }
}

TEST_CASE("hex helpers") {
  const auto frame = proto::encode(proto::make_heartbeat(5));
  CHECK(proto::parse_hex(proto::to_hex(frame)) == frame);
  CHECK(proto::parse_hex("48 4d\n0a") == std::vector<std::uint8_t>{0x48, 0x4D, 0x0A});
}

TEST_CASE("transport with no jitter delivers after exactly the latency") {
  transport::SimulatedLink link({16.0, 0.0, 0.0}, 1, RngStream::transport_up);
  for (int k = 0; k < 200; ++k) {
    const double now = 20.0 * k;
    REQUIRE(link.send({static_cast<std::uint8_t>(k)}, now));
    CHECK_FALSE(link.receive(now + 15.999).has_value());
    const auto d = link.receive(now + 16.0);
    REQUIRE(d);
    CHECK(d->deliver_ms == now + 16.0);
    CHECK(d->deliver_ms - d->sent_ms == 16.0);
    CHECK(d->bytes[0] == static_cast<std::uint8_t>(k));
  }
}

TEST_CASE("transport mean latency under jitter") {
  transport::SimulatedLink link({16.0, 2.0, 0.0}, 7, RngStream::transport_up);
  double sum = 0.0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    link.send({0}, 100.0 * k);
    const auto d = link.receive(100.0 * k + 60.0);
    REQUIRE(d);
    sum += d->deliver_ms - d->sent_ms;
  }
  CHECK(std::abs(sum / n - 16.0) < 0.1);
}

TEST_CASE("transport never reorders") {
  transport::SimulatedLink link({16.0, 8.0, 0.0}, 3, RngStream::transport_down);
  for (int k = 0; k < 5000; ++k) link.send({static_cast<std::uint8_t>(k % 256)}, 1.0 * k);
  const auto all = link.receive_all(1e9);
  REQUIRE(all.size() == 5000);
  for (std::size_t i = 1; i < all.size(); ++i) {
    CHECK(all[i].deliver_ms >= all[i - 1].deliver_ms);
    CHECK(all[i].bytes[0] == static_cast<std::uint8_t>(i % 256));
  }
}

TEST_CASE("drop probability one delivers nothing") {
  transport::SimulatedLink link({16.0, 0.0, 1.0}, 1, RngStream::transport_up);
  for (int k = 0; k < 1000; ++k) CHECK_FALSE(link.send({1}, k));
  CHECK(link.receive_all(1e9).empty());
  CHECK(link.dropped() == 1000);
}

TEST_CASE("closed links raise Disconnected") {
  transport::SimulatedLink link({16.0, 0.0, 0.0}, 1, RngStream::transport_up);
  link.send({1}, 0.0);
  link.close();
  CHECK_THROWS_AS(link.send({2}, 1.0), Disconnected);
  CHECK(link.receive(20.0).has_value());
  CHECK_THROWS_AS((void)link.receive(30.0), Disconnected);
}

TEST_CASE("transport config validation") {
  CHECK_THROWS_AS((transport::TransportConfig{-1.0, 0.0, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((transport::TransportConfig{16.0, 0.0, 1.5}.validate()), ConfigError);
}

TEST_CASE("text mirror round trips command and heartbeat packets") {
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    Packet p;
    if (i % 3 == 0) {
      proto::CommandPayload c;
      c.v_x = finite_float(rng);
      c.yaw_rate = finite_float(rng);
      c.height = finite_float(rng);
      for (auto& v : c.arm) v = finite_float(rng);
      for (auto& v : c.hand) v = finite_float(rng);
      c.reserved = finite_float(rng);
      p = proto::make_command(static_cast<std::uint32_t>(rng.bits()), c);
    } else if (i % 3 == 1) {
      proto::CommandListPayload c{finite_float(rng), finite_float(rng), finite_float(rng), {}};
      c.upper.resize(rng.bits() % 40);
      for (auto& v : c.upper) v = finite_float(rng);
      p = proto::make_command(static_cast<std::uint32_t>(rng.bits()), c);
    } else {
      p = proto::make_heartbeat(static_cast<std::uint32_t>(rng.bits()));
    }
    const auto m = textproto::parse_client_message(textproto::to_text(p));
    REQUIRE(m.packet.has_value());
    REQUIRE(*m.packet == p);
  }
}

TEST_CASE("text state messages carry the slots and the echo") {
  std::array<float, proto::kPayloadFloats> s{};
  s[proto::state_slot::t] = 1.5F;
  s[proto::state_slot::base_height] = 0.7F;
  s[proto::state_slot::last_seq] = 12.0F;
  const auto j = nlohmann::json::parse(textproto::to_text(proto::make_state(3, s), 1234.5));
  CHECK(j.at("type") == "state");
  CHECK(j.at("t").get<double>() == 1.5);
  CHECK(j.at("base_height").get<float>() == 0.7F);
  CHECK(j.at("last_seq").get<double>() == 12.0);
  CHECK(j.at("echo_sent_ms").get<double>() == 1234.5);
}

TEST_CASE("malformed client text is rejected without throwing") {
  for (const char* text : {"", "{", "[]", R"({"type":"fly"})", R"({"type":"command","seq":1})",
                           R"({"type":"command","seq":-1,"v_x":0,"yaw_rate":0,"height":0.7})"}) {
    const auto m = textproto::parse_client_message(text);
    CHECK(m.kind == textproto::Kind::unknown);
    CHECK_FALSE(m.error.empty());
  }
  CHECK(textproto::parse_client_message(R"({"type":"hello"})").kind == textproto::Kind::hello);
  const auto rec = textproto::parse_client_message(R"({"type":"record","on":true})");
  CHECK(rec.kind == textproto::Kind::record);
  CHECK(rec.record_on);
}

TEST_CASE("handshake lists joints and command ranges") {
  const auto& d = test::g1();
  const auto j = nlohmann::json::parse(textproto::handshake(d, 30.0));
  CHECK(j.at("type") == "handshake");
  CHECK(j.at("robot") == "g1");
  CHECK(j.at("joints").size() == d.n_joints());
  CHECK(j.at("upper").size() == d.n_upper());
  CHECK(j.at("cmd_ranges").at("v_x").at(1).get<double>() == 1.2);
}
