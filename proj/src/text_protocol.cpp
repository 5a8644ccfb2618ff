#include "wbt/text_protocol.hpp"

#include <json.hpp>

namespace wbt::textproto {

using nlohmann::json;

namespace {

json floats(auto first, auto last) {
  json a = json::array();
  for (; first != last; ++first) a.push_back(static_cast<double>(*first));
  return a;
}

template <std::size_t N>
void read_floats(const json& a, std::array<float, N>& out) {
  if (a.size() != N) throw std::invalid_argument("expected " + std::to_string(N) + " values");
  for (std::size_t i = 0; i < N; ++i) out[i] = static_cast<float>(a.at(i).get<double>());
}

proto::Packet command_packet(const json& j) {
  const auto& jseq = j.at("seq");
  if (!jseq.is_number_unsigned() || jseq.get<std::uint64_t>() > 0xFFFFFFFFULL) throw std::invalid_argument("bad seq");
  const auto seq = jseq.get<std::uint32_t>();
  const int version = j.value("version", 1);
  if (version == proto::kVersionFixed) {
    proto::CommandPayload c;
    c.v_x = static_cast<float>(j.at("v_x").get<double>());
    c.yaw_rate = static_cast<float>(j.at("yaw_rate").get<double>());
    c.height = static_cast<float>(j.at("height").get<double>());
    if (j.contains("arm")) read_floats(j.at("arm"), c.arm);
    if (j.contains("hand")) read_floats(j.at("hand"), c.hand);
    c.reserved = static_cast<float>(j.value("reserved", 0.0));
    return proto::make_command(seq, c);
  }
  if (version == proto::kVersionList) {
    proto::CommandListPayload c;
    c.v_x = static_cast<float>(j.at("v_x").get<double>());
    c.yaw_rate = static_cast<float>(j.at("yaw_rate").get<double>());
    c.height = static_cast<float>(j.at("height").get<double>());
    for (const auto& v : j.at("upper")) c.upper.push_back(static_cast<float>(v.get<double>()));
    return proto::make_command(seq, c);
  }
  throw std::invalid_argument("unsupported command version " + std::to_string(version));
}

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
  ClientMessage m;
  try {
    const json j = json::parse(text);
    const auto type = j.at("type").get<std::string>();
    if (type == "hello") {
      m.kind = Kind::hello;
    } else if (type == "command") {
      m.kind = Kind::command;
      m.packet = command_packet(j);
      if (j.contains("sent_ms")) m.sent_ms = j.at("sent_ms").get<double>();
    } else if (type == "heartbeat") {
      m.kind = Kind::heartbeat;
      m.packet = proto::make_heartbeat(j.value("seq", 0U));
      if (j.contains("sent_ms")) m.sent_ms = j.at("sent_ms").get<double>();
    } else if (type == "record") {
      m.kind = Kind::record;
      m.record_on = j.at("on").get<bool>();
    } else {
      m.error = "unknown message type '" + type + "'";
    }
  } catch (const std::exception& e) {
    m.kind = Kind::unknown;
    m.packet.reset();
    m.error = e.what();
  }
  return m;
}

std::string to_text(const proto::Packet& p, std::optional<double> echo_sent_ms) {
  json j;
  j["seq"] = p.seq;
  j["version"] = p.version;
  switch (p.type) {
    case proto::PacketType::command:
      j["type"] = "command";
      if (auto c = proto::read_command(p)) {
        j["v_x"] = c->v_x;
        j["yaw_rate"] = c->yaw_rate;
        j["height"] = c->height;
        j["arm"] = floats(c->arm.begin(), c->arm.end());
        j["hand"] = floats(c->hand.begin(), c->hand.end());
        j["reserved"] = c->reserved;
      } else if (auto l = proto::read_command_list(p)) {
        j["v_x"] = l->v_x;
        j["yaw_rate"] = l->yaw_rate;
        j["height"] = l->height;
        j["upper"] = floats(l->upper.begin(), l->upper.end());
      }
      break;
    case proto::PacketType::state: {
      namespace s = proto::state_slot;
      j["type"] = "state";
      if (auto v = proto::read_state(p)) {
        const auto& a = *v;
        j["t"] = a[s::t];
        j["base_height"] = a[s::base_height];
        j["v_x"] = a[s::v_x];
        j["v_y"] = a[s::v_y];
        j["yaw_rate"] = a[s::yaw_rate];
        j["roll"] = a[s::roll];
        j["pitch"] = a[s::pitch];
        j["cmd"] = {a[s::cmd_v_x], a[s::cmd_yaw_rate], a[s::cmd_height]};
        j["reward"] = a[s::reward];
        j["flags"] = static_cast<std::uint32_t>(a[s::flags]);
        j["last_seq"] = a[s::last_seq];
        j["lower_q"] = floats(a.begin() + s::lower_q, a.begin() + s::lower_q + s::lower_q_count);
      }
      break;
    }
    case proto::PacketType::heartbeat:
      j["type"] = "heartbeat";
      break;
  }
  if (echo_sent_ms) j["echo_sent_ms"] = *echo_sent_ms;
  return j.dump();
}

std::string handshake(const robot::RobotDescription& desc, double state_hz) {
  json joints = json::array();
  for (const auto& jt : desc.joints) {
    joints.push_back({{"name", jt.name},
                      {"group", robot::to_string(jt.group)},
                      {"limits", {jt.pos_min, jt.pos_max}},
                      {"default", jt.default_pos}});
  }
  const auto h = desc.height_command_range();
  json j{{"type", "handshake"},
         {"robot", desc.name},
         {"state_hz", state_hz},
         {"joints", joints},
         {"upper", json::array()},
         {"cmd_ranges",
          {{"v_x", {desc.cmd_ranges.lin_vel_x.lo, desc.cmd_ranges.lin_vel_x.hi}},
           {"yaw_rate", {desc.cmd_ranges.ang_vel_yaw.lo, desc.cmd_ranges.ang_vel_yaw.hi}},
           {"height", {h.lo, h.hi}}}}};
  for (std::size_t k : desc.upper_indices) j["upper"].push_back(desc.joints[k].name);
  return j.dump();
}

std::string record_ack(bool on, std::string_view path) {
  return json{{"type", "record_ack"}, {"on", on}, {"path", std::string(path)}}.dump();
}

std::string error_message(std::string_view what) {
  return json{{"type", "error"}, {"message", std::string(what)}}.dump();
}

}  // namespace wbt::textproto
