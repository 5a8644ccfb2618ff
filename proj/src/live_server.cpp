#include "wbt/live_server.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "wbt/errors.hpp"
#include "wbt/records.hpp"
#include "wbt/text_protocol.hpp"

namespace wbt::live {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, const LiveConfig& cfg, LiveStats& stats, std::mutex& stats_mu, std::uint64_t id)
      : ws_(std::move(socket)),
        control_timer_(ws_.get_executor()),
        state_timer_(ws_.get_executor()),
        cfg_(cfg),
        stats_(stats),
        stats_mu_(stats_mu),
        id_(id) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->fail("accept", ec);
      self->read();
    });
  }

  void close() {
    if (closing_) return;
    closing_ = true;
    finish_recording();
    control_timer_.cancel();
    state_timer_.cancel();
    beast::error_code ec;
    ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
    ws_.next_layer().close(ec);
  }

 private:
  double now_ms() const { return std::chrono::duration<double, std::milli>(Clock::now() - t0_).count(); }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        if (ec != websocket::error::closed) spdlog::debug("session {}: read ended: {}", self->id_, ec.message());
        return self->close();
      }
      self->on_message(beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      if (!self->closing_) self->read();
    });
  }

  void on_message(const std::string& text) {
    {
      std::lock_guard lock(stats_mu_);
      ++stats_.messages_in;
    }
    auto m = textproto::parse_client_message(text);
    switch (m.kind) {
      case textproto::Kind::hello:
        if (!loop_) begin();
        send(textproto::handshake(*cfg_.session.episode.desc, cfg_.state_hz));
        break;
      case textproto::Kind::command:
      case textproto::Kind::heartbeat:
        if (!loop_) {
          send(textproto::error_message("send hello first"));
          break;
        }
        if (m.sent_ms && m.packet->type == proto::PacketType::command) sent_ms_[m.packet->seq] = *m.sent_ms;
        if (!link_->closed()) (void)link_->send(proto::encode(*m.packet), now_ms());
        break;
      case textproto::Kind::record:
        toggle_recording(m.record_on);
        break;
      case textproto::Kind::unknown:
        send(textproto::error_message(m.error));
        break;
    }
  }

  void begin() {
    auto sc = cfg_.session;
    {
      std::lock_guard lock(stats_mu_);
      sc.episode.seed += stats_.sessions;
      ++stats_.sessions;
    }
    loop_.emplace(sc);
    link_.emplace(sc.transport, sc.episode.seed, RngStream::transport_up);
    down_.emplace(sc.transport, sc.episode.seed, RngStream::transport_down);
    t0_ = Clock::now();
    tick_ = 0;
    spdlog::info("session {}: started (robot {}, seed {})", id_, sc.robot_name, sc.episode.seed);
    if (!cfg_.record_path.empty()) toggle_recording(true);
    schedule_control();
    schedule_state();
  }

  void schedule_control() {
    const double period_ms = 1000.0 / loop_->config().control_hz();
    control_timer_.expires_at(t0_ + std::chrono::microseconds(std::llround(static_cast<double>(tick_) * period_ms * 1000.0)));
    control_timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closing_) return;
      self->control_tick();
    });
  }

  void control_tick() {
    const double now = static_cast<double>(tick_) * 1000.0 / loop_->config().control_hz();
    for (auto& d : link_->receive_all(now)) loop_->ingest(d.bytes, now);
    auto st = loop_->step(now);
    ++tick_;
    history_.push_back(st.record);
    if (writer_) write_record(st.record);
    (void)down_->send(proto::encode(st.state), now);
    if (loop_->done()) {
      spdlog::info("session {}: episode ended at t = {:.2f} s ({})", id_, st.record.t, st.record.reason);
      latest_state_ = st.state;
      flush_state();
      finish_recording();
      send(R"({"type":"ended","reason":")" + st.record.reason + "\"}");
      return;
    }
    schedule_control();
  }

  void schedule_state() {
    state_timer_.expires_after(std::chrono::microseconds(std::llround(1e6 / cfg_.state_hz)));
    state_timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closing_) return;
      for (auto& d : self->down_->receive_all(self->now_ms())) {
        auto r = proto::decode(d.bytes);
        if (r.ok()) self->latest_state_ = std::move(*r.packet);
      }
      self->flush_state();
      if (!self->loop_->done()) self->schedule_state();
    });
  }

  void flush_state() {
    if (!latest_state_) return;
    std::optional<double> echo;
    if (auto s = proto::read_state(*latest_state_)) {
      const float seq = (*s)[proto::state_slot::last_seq];
      if (seq >= 0.0F) {
        if (auto it = sent_ms_.find(static_cast<std::uint32_t>(seq)); it != sent_ms_.end()) echo = it->second;
        sent_ms_.erase(sent_ms_.begin(), sent_ms_.lower_bound(static_cast<std::uint32_t>(seq)));
      }
    }
    send(textproto::to_text(*latest_state_, echo));
    latest_state_.reset();
    std::lock_guard lock(stats_mu_);
    ++stats_.states_out;
  }

  // Recording always covers the episode from tick 0 so the file replays.
  void toggle_recording(bool on) {
    std::string path;
    if (on && !writer_ && loop_) {
      const auto p = !cfg_.record_path.empty()
                         ? cfg_.record_path
                         : cfg_.record_dir / ("session-" + std::to_string(id_) + ".jsonl");
      writer_.emplace(p, records::header_for(loop_->config()));
      for (const auto& r : history_) write_record(r);
      path = p.string();
      record_file_ = path;
      spdlog::info("session {}: recording to {}", id_, path);
    } else if (!on) {
      path = record_file_;
      finish_recording();
    } else {
      path = record_file_;
    }
    send(textproto::record_ack(writer_.has_value(), path));
  }

  void write_record(const gateway::TickRecord& r) {
    writer_->write(r);
    std::lock_guard lock(stats_mu_);
    ++stats_.records_written;
  }

  void finish_recording() {
    if (!writer_) return;
    writer_->close();
    writer_.reset();
  }

  void send(std::string text) {
    if (closing_) return;
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) write_next();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->fail("write", ec);
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write_next();
    });
  }

  void fail(const char* what, beast::error_code ec) {
    spdlog::debug("session {}: {} failed: {}", id_, what, ec.message());
    close();
  }

  websocket::stream<tcp::socket> ws_;
  beast::flat_buffer buffer_;
  asio::steady_timer control_timer_;
  asio::steady_timer state_timer_;
  const LiveConfig& cfg_;
  LiveStats& stats_;
  std::mutex& stats_mu_;
  std::uint64_t id_;

  std::optional<gateway::ControlLoop> loop_;
  std::optional<transport::SimulatedLink> link_;
  std::optional<transport::SimulatedLink> down_;
  std::optional<proto::Packet> latest_state_;
  std::optional<records::RecordWriter> writer_;
  std::string record_file_;
  std::vector<gateway::TickRecord> history_;
  std::map<std::uint32_t, double> sent_ms_;
  std::deque<std::string> outbox_;
  Clock::time_point t0_{Clock::now()};
  std::int64_t tick_{0};
  bool closing_{false};
};

}  // namespace

struct LiveServer::Impl {
  LiveConfig cfg;
  asio::io_context io{1};
  tcp::acceptor acceptor{io};
  std::thread thread;
  std::mutex mu;
  std::condition_variable cv;
  bool stopped{false};
  LiveStats stats;
  std::mutex stats_mu;
  std::uint64_t next_id{1};
  std::weak_ptr<Session> current;

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      if (auto old = current.lock()) old->close();  // one cockpit at a time; the newest wins
      auto s = std::make_shared<Session>(std::move(socket), cfg, stats, stats_mu, next_id++);
      current = s;
      s->start();
      accept();
    });
  }
};

LiveServer::LiveServer(LiveConfig cfg) : impl_(std::make_unique<Impl>()) {
  cfg.session.validate();
  if (!(cfg.state_hz > 0.0)) throw ConfigError("live server: state rate must be positive");
  impl_->cfg = std::move(cfg);
}

LiveServer::~LiveServer() { stop(); }

unsigned short LiveServer::start() {
  auto& im = *impl_;
  const tcp::endpoint ep(asio::ip::make_address(im.cfg.address), im.cfg.port);
  im.acceptor.open(ep.protocol());
  im.acceptor.set_option(asio::socket_base::reuse_address(true));
  im.acceptor.bind(ep);
  im.acceptor.listen();
  const auto port = im.acceptor.local_endpoint().port();
  im.accept();
  im.thread = std::thread([&im] { im.io.run(); });
  spdlog::info("gateway listening on ws://{}:{}", im.cfg.address, port);
  return port;
}

void LiveServer::stop() {
  auto& im = *impl_;
  {
    std::lock_guard lock(im.mu);
    if (im.stopped) return;
    im.stopped = true;
  }
  asio::post(im.io, [&im] {
    beast::error_code ec;
    im.acceptor.close(ec);
    if (auto s = im.current.lock()) s->close();
  });
  if (im.thread.joinable()) im.thread.join();
  im.cv.notify_all();
}

void LiveServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [this] { return impl_->stopped; });
}

LiveStats LiveServer::stats() const {
  std::lock_guard lock(impl_->stats_mu);
  return impl_->stats;
}

}  // namespace wbt::live
