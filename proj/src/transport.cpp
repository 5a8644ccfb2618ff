#include "wbt/transport.hpp"

#include <algorithm>
#include <chrono>

#include "wbt/errors.hpp"

namespace wbt::transport {

void TransportConfig::validate() const {
  if (!(latency_ms >= 0.0)) throw ConfigError("transport: latency must be >= 0");
  if (!(jitter_ms >= 0.0)) throw ConfigError("transport: jitter must be >= 0");
  if (!(drop_prob >= 0.0 && drop_prob <= 1.0)) throw ConfigError("transport: drop probability outside [0, 1]");
}

SimulatedLink::SimulatedLink(TransportConfig cfg, std::uint64_t seed, RngStream stream)
    : cfg_(cfg), rng_(seed, stream) {
  cfg_.validate();
}

bool SimulatedLink::send(std::vector<std::uint8_t> bytes, double now_ms) {
  if (closed_) throw Disconnected("send on a closed link");
  ++sent_;
  if (cfg_.drop_prob > 0.0 && rng_.bernoulli(cfg_.drop_prob)) {
    ++dropped_;
    return false;
  }
  const double delay = std::max(0.0, cfg_.latency_ms + rng_.normal(0.0, cfg_.jitter_ms));
  const double at = std::max(now_ms + delay, last_deliver_ms_);
  last_deliver_ms_ = at;
  queue_.push_back({now_ms, at, std::move(bytes)});
  return true;
}

std::optional<Delivery> SimulatedLink::receive(double now_ms) {
  if (queue_.empty()) {
    if (closed_) throw Disconnected("link closed");
    return std::nullopt;
  }
  if (queue_.front().deliver_ms > now_ms) return std::nullopt;
  Delivery d = std::move(queue_.front());
  queue_.pop_front();
  return d;
}

std::vector<Delivery> SimulatedLink::receive_all(double now_ms) {
  std::vector<Delivery> out;
  while (!queue_.empty() && queue_.front().deliver_ms <= now_ms) {
    out.push_back(std::move(queue_.front()));
    queue_.pop_front();
  }
  if (out.empty() && queue_.empty() && closed_) throw Disconnected("link closed");
  return out;
}

double wall_clock_ms() noexcept {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace wbt::transport
