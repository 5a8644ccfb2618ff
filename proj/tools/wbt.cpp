// wbt: batch evaluation, distribution checks, golden tables, packet
// inspection, scripted rollouts, replay and the live gateway.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "wbt/errors.hpp"
#include "wbt/golden.hpp"
#include "wbt/harness.hpp"
#include "wbt/live_server.hpp"
#include "wbt/metrics.hpp"
#include "wbt/packet.hpp"
#include "wbt/records.hpp"
#include "wbt/session.hpp"
#include "wbt/text_protocol.hpp"

namespace {

using nlohmann::json;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void setup_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("WBT_LOG_LEVEL")) {
    const auto lvl = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only honour the real spelling.
    if (lvl != spdlog::level::off || std::string(env) == "off") spdlog::set_level(lvl);
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw wbt::NotFound("cannot write " + path);
  out << text;
}

wbt::plant::TorqueLaw parse_law(const std::string& s) {
  if (s == "literal") return wbt::plant::TorqueLaw::literal;
  if (s == "conventional") return wbt::plant::TorqueLaw::conventional;
  throw wbt::ConfigError("unknown torque law '" + s + "'");
}

struct Common {
  std::string data_dir;
  [[nodiscard]] std::filesystem::path dir() const {
    return data_dir.empty() ? wbt::robot::default_data_dir() : std::filesystem::path(data_dir);
  }
};

// ------------------------------------------------------------------ eval-batch

struct EvalOpts {
  wbt::harness::EvalConfig cfg;
  std::string law{"literal"};
  std::string csv;
};

int run_eval(const EvalOpts& o, const Common& c) {
  auto cfg = o.cfg;
  cfg.data_dir = c.dir();
  cfg.torque_law = parse_law(o.law);
  const auto rep = wbt::harness::eval_batch(cfg);
  std::cout << wbt::harness::format_table(rep);
  std::cout << "wall " << rep.wall_seconds << " s on " << rep.threads << " threads\n";
  if (!o.csv.empty()) write_file(o.csv, wbt::harness::format_csv(rep));
  return 0;
}

// ------------------------------------------------------------------ dist-check

struct DistOpts {
  std::vector<double> rho{0.0, 0.25, 0.5, 0.75, 0.9, 0.999};
  std::size_t samples{1000000};
  std::uint64_t seed{0};
  std::string out;
};

int run_dist(const DistOpts& o) {
  const auto rows = wbt::harness::dist_check(o.rho, o.samples, o.seed);
  const auto text = wbt::harness::dist_check_json(rows) + "\n";
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_file(o.out, text);
  }
  return 0;
}

// ------------------------------------------------------------------ reward-dump

struct DumpOpts {
  wbt::harness::DumpConfig cfg;
  std::string out;
};

int run_dump(const DumpOpts& o, const Common& c) {
  auto cfg = o.cfg;
  cfg.data_dir = c.dir();
  const auto csv = wbt::harness::reward_dump_csv(cfg);
  if (o.out.empty()) {
    std::cout << csv;
  } else {
    write_file(o.out, csv);
  }
  return 0;
}

// ------------------------------------------------------------------ golden-verify

int run_golden(const std::string& golden_dir, const Common& c) {
  const auto rep = wbt::golden::verify(c.dir(), golden_dir);
  std::cout << wbt::golden::format_report(rep);
  return rep.ok() ? 0 : 1;
}

// ------------------------------------------------------------------ packet-inspect

int run_inspect(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw wbt::NotFound("cannot open " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto bytes = wbt::proto::parse_hex(text);
  std::cout << "bytes   " << bytes.size() << '\n';
  const auto r = wbt::proto::decode(bytes);
  if (!r.ok()) {
    std::cout << "error   " << wbt::proto::to_string(r.error) << '\n';
    return 1;
  }
  const auto& p = *r.packet;
  std::cout << "version " << int(p.version) << '\n'
            << "type    " << wbt::proto::to_string(p.type) << '\n'
            << "seq     " << p.seq << '\n'
            << "payload " << p.payload.size() << " bytes\n"
            << "crc     " << std::hex << std::setw(8) << std::setfill('0')
            << (std::uint32_t{bytes[bytes.size() - 4]} | std::uint32_t{bytes[bytes.size() - 3]} << 8 |
                std::uint32_t{bytes[bytes.size() - 2]} << 16 | std::uint32_t{bytes[bytes.size() - 1]} << 24)
            << std::dec << std::setfill(' ') << '\n'
            << json::parse(wbt::textproto::to_text(p)).dump(2) << '\n';
  return 0;
}

// ------------------------------------------------------------------ rollout

struct RolloutOpts {
  std::string robot{"g1"};
  std::string script;
  double seconds{20.0};
  std::uint64_t seed{0};
  double latency_ms{16.0};
  double jitter_ms{0.0};
  double drop{0.0};
  bool randomize{false};
  std::string law{"literal"};
  std::string metrics;
  std::string record;
};

int run_rollout(const RolloutOpts& o, const Common& c) {
  auto cfg = wbt::gateway::make_session_config(o.robot, o.seed, c.dir());
  cfg.max_seconds = o.seconds;
  cfg.transport = {o.latency_ms, o.jitter_ms, o.drop};
  cfg.episode.randomize = o.randomize;
  cfg.episode.plant.torque_law = parse_law(o.law);
  const auto& desc = *cfg.episode.desc;

  wbt::gateway::Script script;
  if (o.script.empty()) {
    script.keyframes.push_back({0.0, {0.0, 0.0, desc.height_target_walk}, {}});
  } else {
    script = wbt::gateway::load_script(o.script);
  }
  cfg.command_hz = script.command_hz;
  wbt::gateway::ScriptedSource source(desc, script);

  std::optional<wbt::records::RecordWriter> writer;
  if (!o.record.empty()) writer.emplace(o.record, wbt::records::header_for(cfg));
  const auto res = wbt::gateway::run_session(cfg, source, [&](const wbt::gateway::TickRecord& r) {
    if (writer) writer->write(r);
  });
  if (writer) writer->close();

  const auto m = wbt::metrics::compute(res.records, cfg.max_seconds);
  const auto& rtt = source.round_trips_ms();
  json j{{"robot", o.robot},
         {"seed", o.seed},
         {"ticks", res.records.size()},
         {"terminated", res.terminated},
         {"disconnected", res.disconnected},
         {"lin_vel_err", m.lin_vel_err},
         {"lin_vel_err_y", m.lin_vel_err_y},
         {"ang_vel_err", m.ang_vel_err},
         {"height_err", m.height_err},
         {"living_time", res.living_time},
         {"digest", wbt::records::digest_hex(res.digest)},
         {"commands_accepted", res.stats.commands_accepted},
         {"mean_rtt_ms", rtt.empty() ? json(nullptr)
                                     : json(std::accumulate(rtt.begin(), rtt.end(), 0.0) /
                                            static_cast<double>(rtt.size()))}};
  if (o.metrics.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_file(o.metrics, j.dump(2) + "\n");
    std::cout << "digest " << wbt::records::digest_hex(res.digest) << ", " << res.records.size() << " records\n";
  }
  return 0;
}

// ------------------------------------------------------------------ replay

int run_replay(const std::string& file, const std::optional<std::uint64_t>& seed, const Common& c) {
  const auto rec = wbt::records::read_records(file);
  const auto res = wbt::records::replay(rec, seed, c.dir());
  std::cout << "records  " << rec.records.size() << '\n'
            << "recorded " << wbt::records::digest_hex(res.recorded) << '\n'
            << "replayed " << wbt::records::digest_hex(res.replayed) << '\n'
            << (res.match() ? "MATCH" : "DIFFER") << '\n';
  return res.match() ? 0 : 2;
}

// ------------------------------------------------------------------ gateway

struct GatewayOpts {
  std::string robot{"g1"};
  std::uint64_t seed{0};
  double latency_ms{16.0};
  double jitter_ms{0.0};
  double drop{0.0};
  std::string listen{"127.0.0.1:8765"};
  std::string record;
  std::string record_dir{"."};
  double duration{0.0};
  double max_seconds{3600.0};
};

int run_gateway(const GatewayOpts& o, const Common& c) {
  wbt::live::LiveConfig cfg;
  cfg.session = wbt::gateway::make_session_config(o.robot, o.seed, c.dir());
  cfg.session.transport = {o.latency_ms, o.jitter_ms, o.drop};
  cfg.session.max_seconds = o.max_seconds;
  const auto colon = o.listen.rfind(':');
  if (colon == std::string::npos) throw wbt::ConfigError("--listen expects host:port");
  cfg.address = o.listen.substr(0, colon);
  cfg.port = static_cast<unsigned short>(std::stoi(o.listen.substr(colon + 1)));
  cfg.record_path = o.record;
  cfg.record_dir = o.record_dir;

  wbt::live::LiveServer server(cfg);
  const auto port = server.start();
  std::cout << "listening on ws://" << cfg.address << ':' << port << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto start = std::chrono::steady_clock::now();
  while (!g_interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (o.duration > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= o.duration) {
      break;
    }
  }
  server.stop();
  const auto s = server.stats();
  std::cout << "sessions " << s.sessions << ", messages in " << s.messages_in << ", states out " << s.states_out
            << ", records " << s.records_written << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"whole-body teleoperation toolkit"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--data-dir", common.data_dir, "Preset directory (default: WBT_DATA_DIR or the build-time path)");

  EvalOpts eval;
  auto* ev = app.add_subcommand("eval-batch", "Parallel scripted rollouts; prints the five-metric table");
  ev->add_option("--robot", eval.cfg.robot, "Robot preset or description file");
  ev->add_option("--reward", eval.cfg.reward_preset, "Reward preset (default: the robot's)");
  ev->add_option("--n-envs", eval.cfg.n_envs, "Number of environments")->check(CLI::PositiveNumber);
  ev->add_option("--seconds", eval.cfg.seconds, "Episode horizon in seconds");
  ev->add_option("--rho-a", eval.cfg.rho_a, "Upper action ratio")->check(CLI::Range(0.0, 1.0));
  ev->add_option("--seed", eval.cfg.seed, "Base seed");
  ev->add_option("--threads", eval.cfg.threads, "Worker threads (0: all cores)");
  ev->add_flag("--perfect", eval.cfg.perfect_tracking, "Perfect-tracking stub plant");
  ev->add_flag("--randomize", eval.cfg.randomize, "Per-episode domain randomization");
  ev->add_option("--torque-law", eval.law, "literal | conventional");
  ev->add_option("--csv", eval.csv, "Per-environment CSV output");

  DistOpts dist;
  auto* dc = app.add_subcommand("dist-check", "KS statistics of the curriculum ratio sampler");
  dc->add_option("--rho", dist.rho, "rho_a values, comma separated")->delimiter(',');
  dc->add_option("--samples", dist.samples, "Samples per rho_a (>= 10000)");
  dc->add_option("--seed", dist.seed, "Seed");
  dc->add_option("--out", dist.out, "Write the JSON report here");

  DumpOpts dump;
  auto* rd = app.add_subcommand("reward-dump", "Per-term rewards of one scripted episode as CSV");
  rd->add_option("--robot", dump.cfg.robot, "Robot preset");
  rd->add_option("--reward", dump.cfg.reward_preset, "Reward preset");
  rd->add_option("--seconds", dump.cfg.seconds, "Episode length");
  rd->add_option("--rho-a", dump.cfg.rho_a, "Upper action ratio")->check(CLI::Range(0.0, 1.0));
  rd->add_option("--seed", dump.cfg.seed, "Seed");
  rd->add_option("--out", dump.out, "CSV output file");

  std::string golden_dir;
  auto* gv = app.add_subcommand("golden-verify", "Compare presets against the golden tables");
  gv->add_option("--golden-dir", golden_dir, "Golden table directory (default: <data-dir>/golden)");

  std::string hexfile;
  auto* pi = app.add_subcommand("packet-inspect", "Decode and print a hex-encoded packet");
  pi->add_option("hexfile", hexfile, "File with the packet as hex")->required();

  RolloutOpts roll;
  auto* ro = app.add_subcommand("rollout", "Scripted cockpit session on the virtual clock");
  ro->add_option("--robot", roll.robot, "Robot preset");
  ro->add_option("--script", roll.script, "Command script (default: stand still)");
  ro->add_option("--seconds", roll.seconds, "Session cap");
  ro->add_option("--seed", roll.seed, "Seed");
  ro->add_option("--latency-ms", roll.latency_ms, "Transport latency");
  ro->add_option("--jitter-ms", roll.jitter_ms, "Transport jitter (sd)");
  ro->add_option("--drop", roll.drop, "Drop probability")->check(CLI::Range(0.0, 1.0));
  ro->add_flag("--randomize", roll.randomize, "Per-episode domain randomization");
  ro->add_option("--torque-law", roll.law, "literal | conventional");
  ro->add_option("--metrics", roll.metrics, "Write metrics JSON here");
  ro->add_option("--record", roll.record, "Write the episode record here");

  std::string replay_file;
  std::optional<std::uint64_t> replay_seed;
  auto* rp = app.add_subcommand("replay", "Re-run a record file and compare digests");
  rp->add_option("file", replay_file, "Record file")->required();
  rp->add_option("--seed", replay_seed, "Override the recorded seed");

  GatewayOpts gw;
  auto* ga = app.add_subcommand("gateway", "Live WebSocket gateway for the browser cockpit");
  ga->add_option("--robot", gw.robot, "Robot preset");
  ga->add_option("--seed", gw.seed, "Seed of the first session");
  ga->add_option("--latency-ms", gw.latency_ms, "Injected latency");
  ga->add_option("--jitter-ms", gw.jitter_ms, "Injected jitter (sd)");
  ga->add_option("--drop", gw.drop, "Drop probability")->check(CLI::Range(0.0, 1.0));
  ga->add_option("--listen", gw.listen, "host:port (port 0 picks one)");
  ga->add_option("--record", gw.record, "Record every session to this file");
  ga->add_option("--record-dir", gw.record_dir, "Directory for client-toggled records");
  ga->add_option("--duration", gw.duration, "Stop after this many seconds (0: until interrupted)");
  ga->add_option("--max-seconds", gw.max_seconds, "Session cap");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*ev) return run_eval(eval, common);
    if (*dc) return run_dist(dist);
    if (*rd) return run_dump(dump, common);
    if (*gv) return run_golden(golden_dir, common);
    if (*pi) return run_inspect(hexfile);
    if (*ro) return run_rollout(roll, common);
    if (*rp) return run_replay(replay_file, replay_seed, common);
    if (*ga) return run_gateway(gw, common);
  } catch (const wbt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
