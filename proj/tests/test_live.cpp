#include <doctest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <functional>
#include <json.hpp>

#include "support.hpp"
#include "wbt/errors.hpp"
#include "wbt/live_server.hpp"
#include "wbt/records.hpp"

using namespace wbt;
using nlohmann::json;

namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

class Client {
 public:
  explicit Client(unsigned short port) : ws_(io_) {
    tcp::resolver resolver(io_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }

  void send(const json& j) { ws_.write(asio::buffer(j.dump())); }

  json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }

  /// Reads until `pred` holds; fails after `limit` messages.
  json read_until(const std::function<bool(const json&)>& pred, int limit = 600) {
    for (int i = 0; i < limit; ++i) {
      auto j = read();
      if (pred(j)) return j;
    }
    FAIL("expected message never arrived");
    return {};
  }

  void close() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }

 private:
  asio::io_context io_;
  websocket::stream<tcp::socket> ws_;
};

json command(std::uint32_t seq, double v_x, double sent_ms) {
  return {{"type", "command"}, {"seq", seq},           {"v_x", v_x},
          {"yaw_rate", 0.0},   {"height", 0.74},       {"arm", std::vector<double>(14, 0.0)},
          {"hand", std::vector<double>(14, 0.0)},      {"sent_ms", sent_ms}};
}

live::LiveConfig live_config(const test::TempDir& dir) {
  live::LiveConfig cfg;
  cfg.session = gateway::make_session_config("g1", 3, test::data_dir());
  cfg.session.max_seconds = 60.0;
  cfg.port = 0;
  cfg.record_dir = dir.path();
  return cfg;
}

}  // namespace

TEST_CASE("live server handshake, state echo and recording") {
  test::TempDir dir("live");
  live::LiveServer server(live_config(dir));
  const auto port = server.start();
  REQUIRE(port != 0);

  Client c(port);
  c.send({{"type", "command"}, {"seq", 1}, {"v_x", 0.0}, {"yaw_rate", 0.0}, {"height", 0.7}});
  CHECK(c.read_until([](const json& j) { return j.at("type") == "error"; }).at("message") == "send hello first");

  c.send({{"type", "hello"}});
  const auto hs = c.read_until([](const json& j) { return j.at("type") == "handshake"; });
  CHECK(hs.at("robot") == "g1");
  CHECK(hs.at("joints").size() == test::g1().n_joints());
  CHECK(hs.at("state_hz").get<double>() == 30.0);

  c.send(command(1, 0.3, 1234.0));
  const auto st = c.read_until([](const json& j) { return j.at("type") == "state" && j.at("last_seq") == 1.0; });
  CHECK(st.at("echo_sent_ms").get<double>() == 1234.0);
  CHECK(st.at("cmd").at(0).get<double>() == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(st.at("lower_q").size() == 12);

  c.send({{"type", "nonsense"}});
  CHECK(c.read_until([](const json& j) { return j.at("type") == "error"; }).contains("message"));

  c.send({{"type", "record"}, {"on", true}});
  const auto on = c.read_until([](const json& j) { return j.at("type") == "record_ack"; });
  CHECK(on.at("on") == true);
  const std::string path = on.at("path");
  CHECK(std::filesystem::path(path).parent_path() == dir.path());

  for (std::uint32_t seq = 2; seq <= 6; ++seq) {
    c.send(command(seq, 0.1 * seq, 2000.0 + seq));
    (void)c.read_until([seq](const json& j) { return j.at("type") == "state" && j.at("last_seq") == double(seq); });
  }
  c.send({{"type", "heartbeat"}, {"seq", 7}});
  c.send({{"type", "record"}, {"on", false}});
  const auto off = c.read_until([](const json& j) { return j.at("type") == "record_ack"; });
  CHECK(off.at("on") == false);
  CHECK(off.at("path") == path);
  c.close();
  server.stop();

  const auto stats = server.stats();
  CHECK(stats.sessions == 1);
  CHECK(stats.messages_in >= 10);
  CHECK(stats.states_out > 0);
  CHECK(stats.records_written > 0);

  const auto f = records::read_records(path);
  CHECK(f.records.size() == stats.records_written);
  CHECK(f.records.front().tick == 0);
  bool saw_command = false;
  for (const auto& r : f.records) saw_command = saw_command || r.seq >= 6;
  CHECK(saw_command);
  CHECK(records::replay(f, std::nullopt, test::data_dir()).match());
}

TEST_CASE("live server rejects a bad state rate") {
  test::TempDir dir("live-bad");
  auto cfg = live_config(dir);
  cfg.state_hz = 0.0;
  CHECK_THROWS_AS(live::LiveServer{cfg}, ConfigError);
}

TEST_CASE("a second client replaces the first") {
  test::TempDir dir("live-two");
  live::LiveServer server(live_config(dir));
  const auto port = server.start();
  Client a(port);
  a.send({{"type", "hello"}});
  (void)a.read_until([](const json& j) { return j.at("type") == "handshake"; });
  Client b(port);
  b.send({{"type", "hello"}});
  CHECK(b.read_until([](const json& j) { return j.at("type") == "handshake"; }).at("robot") == "g1");
  b.close();
  server.stop();
  CHECK(server.stats().sessions == 2);
}
