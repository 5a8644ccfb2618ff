#include "wbt/records.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json_util.hpp"
#include "wbt/errors.hpp"

namespace wbt::records {

using detail::json;

void Digest::bytes(const void* p, std::size_t n) noexcept {
  const auto* b = static_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < n; ++i) {
    h_ ^= b[i];
    h_ *= 0x100000001b3ULL;
  }
}

void Digest::add(const gateway::TickRecord& r) noexcept {
  bytes(&r.tick, sizeof r.tick);
  f64(r.t);
  f64(r.base_height);
  for (double v : r.base_vel) f64(v);
  f64(r.yaw_rate);
  for (double v : r.tilt) f64(v);
  for (double v : r.q) f64(v);
  f64(r.reward);
  const unsigned char flags = static_cast<unsigned char>((r.contact[0] ? 1 : 0) | (r.contact[1] ? 2 : 0) |
                                                         (r.terminated ? 4 : 0));
  bytes(&flags, 1);
}

std::uint64_t digest(const std::vector<gateway::TickRecord>& records) noexcept {
  Digest d;
  for (const auto& r : records) d.add(r);
  return d.value();
}

std::string digest_hex(std::uint64_t d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

RecordHeader header_for(const gateway::SessionConfig& cfg) {
  RecordHeader h;
  h.robot = cfg.robot_name;
  h.reward_preset = cfg.reward_preset;
  h.seed = cfg.episode.seed;
  h.control_hz = cfg.control_hz();
  h.max_seconds = cfg.max_seconds;
  h.torque_law = cfg.episode.plant.torque_law == plant::TorqueLaw::literal ? "literal" : "conventional";
  h.push_interval = cfg.episode.plant.push_interval;
  h.push_vel_range = cfg.episode.plant.push_vel_range;
  h.randomize = cfg.episode.randomize;
  h.perfect_tracking = cfg.episode.perfect_tracking;
  h.terms = cfg.episode.record_terms;
  return h;
}

gateway::EpisodeConfig episode_config(const RecordHeader& h, const std::filesystem::path& data_dir) {
  gateway::EpisodeConfig e;
  e.desc = std::make_shared<const robot::RobotDescription>(robot::load_robot(h.robot, data_dir));
  e.plant = plant::PlantConfig::for_robot(*e.desc);
  e.plant.control_hz = h.control_hz;
  e.plant.dt_physics = 1.0 / (h.control_hz * e.plant.substeps);
  if (h.torque_law == "literal") {
    e.plant.torque_law = plant::TorqueLaw::literal;
  } else if (h.torque_law == "conventional") {
    e.plant.torque_law = plant::TorqueLaw::conventional;
  } else {
    throw ConfigError("record header: unknown torque law '" + h.torque_law + "'");
  }
  e.plant.push_interval = h.push_interval;
  e.plant.push_vel_range = h.push_vel_range;
  e.reward = reward::load_reward_preset(h.reward_preset, data_dir);
  e.randomization = rand::load_default_randomization(data_dir);
  e.randomize = h.randomize;
  e.perfect_tracking = h.perfect_tracking;
  e.record_terms = h.terms;
  e.seed = h.seed;
  return e;
}

namespace {

json header_json(const RecordHeader& h) {
  return json{{"format", "wbt-record"},
              {"version", h.version},
              {"robot", h.robot},
              {"reward_preset", h.reward_preset},
              {"seed", h.seed},
              {"config",
               {{"control_hz", h.control_hz},
                {"max_seconds", h.max_seconds},
                {"torque_law", h.torque_law},
                {"push_interval", h.push_interval},
                {"push_vel_range", detail::range_to_json(h.push_vel_range)},
                {"randomize", h.randomize},
                {"perfect_tracking", h.perfect_tracking},
                {"terms", h.terms}}}};
}

RecordHeader parse_header(const json& doc) {
  detail::check_header(doc, "wbt-record", kSchemaVersion);
  RecordHeader h;
  h.version = doc.at("version").get<int>();
  h.robot = detail::require<std::string>(doc, "robot", "record header");
  h.reward_preset = detail::require<std::string>(doc, "reward_preset", "record header");
  h.seed = detail::require<std::uint64_t>(doc, "seed", "record header");
  const auto& c = detail::require<json>(doc, "config", "record header");
  h.control_hz = detail::require<double>(c, "control_hz", "record config");
  h.max_seconds = detail::require<double>(c, "max_seconds", "record config");
  h.torque_law = detail::require<std::string>(c, "torque_law", "record config");
  h.push_interval = detail::require<double>(c, "push_interval", "record config");
  h.push_vel_range = detail::require_range(c, "push_vel_range", "record config");
  h.randomize = detail::require<bool>(c, "randomize", "record config");
  h.perfect_tracking = detail::optional<bool>(c, "perfect_tracking", false);
  h.terms = detail::optional<bool>(c, "terms", false);
  return h;
}

// JSON has no NaN; non-finite values are written as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double get_num(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

json num_array(const auto& values) {
  json a = json::array();
  for (double v : values) a.push_back(num(v));
  return a;
}

template <typename Out>
void read_array(const json& a, Out& out) {
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = get_num(a[i]);
}

}  // namespace

std::string to_json_line(const gateway::TickRecord& r) {
  json j{{"k", r.tick},
         {"t", num(r.t)},
         {"cmd", num_array(std::array<double, 3>{r.cmd.v_x, r.cmd.yaw_rate, r.cmd.height})},
         {"upper", num_array(r.upper_targets)},
         {"h", num(r.base_height)},
         {"v", num_array(r.base_vel)},
         {"wz", num(r.yaw_rate)},
         {"tilt", num_array(r.tilt)},
         {"q", num_array(r.q)},
         {"contact", {r.contact[0], r.contact[1]}},
         {"r", num(r.reward)},
         {"term", r.terminated},
         {"fs", r.failsafe},
         {"seq", r.seq}};
  if (!r.reason.empty()) j["reason"] = r.reason;
  if (!r.terms.empty()) j["terms"] = num_array(r.terms);
  return j.dump();
}

gateway::TickRecord from_json_line(std::string_view line) {
  const json j = detail::parse_json(line, "record line");
  gateway::TickRecord r;
  try {
    r.tick = j.at("k").get<std::int64_t>();
    r.t = get_num(j.at("t"));
    std::array<double, 3> c{};
    read_array(j.at("cmd"), c);
    r.cmd = {c[0], c[1], c[2]};
    r.upper_targets.resize(j.at("upper").size());
    read_array(j.at("upper"), r.upper_targets);
    r.base_height = get_num(j.at("h"));
    read_array(j.at("v"), r.base_vel);
    r.yaw_rate = get_num(j.at("wz"));
    read_array(j.at("tilt"), r.tilt);
    r.q.resize(j.at("q").size());
    read_array(j.at("q"), r.q);
    r.contact = {j.at("contact").at(0).get<bool>(), j.at("contact").at(1).get<bool>()};
    r.reward = get_num(j.at("r"));
    r.terminated = j.at("term").get<bool>();
    r.failsafe = j.at("fs").get<bool>();
    r.seq = j.at("seq").get<std::int64_t>();
    if (j.contains("reason")) r.reason = j.at("reason").get<std::string>();
    if (j.contains("terms")) {
      r.terms.resize(j.at("terms").size());
      read_array(j.at("terms"), r.terms);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("record line: ") + e.what());
  }
  return r;
}

RecordWriter::RecordWriter(const std::filesystem::path& path, const RecordHeader& header) : out_(path) {
  if (!out_) throw NotFound("cannot open record file for writing: " + path.string());
  out_ << header_json(header).dump() << '\n';
}

RecordWriter::~RecordWriter() {
  try {
    close();
  } catch (...) {
  }
}

void RecordWriter::write(const gateway::TickRecord& r) {
  if (closed_) throw Error("record writer already closed");
  out_ << to_json_line(r) << '\n';
  digest_.add(r);
  ++count_;
}

void RecordWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_ << json{{"footer", {{"count", count_}, {"digest", digest_hex(digest_.value())}}}}.dump() << '\n';
  out_.flush();
}

RecordFile read_records(const std::filesystem::path& path) {
  std::istringstream in(detail::read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw TruncationError("record file is empty: " + path.string());
  RecordFile f;
  f.header = parse_header(detail::parse_json(line, "record header"));

  bool footer = false;
  std::uint64_t count = 0;
  std::string footer_digest;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (footer) throw TruncationError("record file has data after the footer");
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw TruncationError("record file ends in a partial line after " + std::to_string(f.records.size()) +
                            " records");
    }
    if (j.contains("footer")) {
      footer = true;
      count = j.at("footer").at("count").get<std::uint64_t>();
      footer_digest = j.at("footer").at("digest").get<std::string>();
      continue;
    }
    f.records.push_back(from_json_line(line));
  }
  if (!footer) throw TruncationError("record file has no footer (" + std::to_string(f.records.size()) + " records)");
  if (count != f.records.size()) {
    throw TruncationError("record footer counts " + std::to_string(count) + " records, file has " +
                          std::to_string(f.records.size()));
  }
  f.digest = digest(f.records);
  if (digest_hex(f.digest) != footer_digest) throw TruncationError("record digest does not match the footer");
  return f;
}

ReplayResult replay(const RecordFile& file, std::optional<std::uint64_t> seed_override,
                    const std::filesystem::path& data_dir) {
  RecordHeader h = file.header;
  if (seed_override) h.seed = *seed_override;
  gateway::Episode ep(episode_config(h, data_dir));
  Digest d;
  ReplayResult res;
  res.recorded = file.digest;
  for (const auto& r : file.records) {
    if (ep.done()) break;
    d.add(ep.tick(r.cmd, r.upper_targets, r.failsafe, r.seq));
    ++res.ticks;
  }
  res.replayed = d.value();
  return res;
}

}  // namespace wbt::records
