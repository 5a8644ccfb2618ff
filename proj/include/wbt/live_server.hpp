#pragma once

// Browser-facing WebSocket endpoint. Text messages mirror the binary packets
// (see text_protocol.hpp); inbound commands are re-framed as binary packets,
// pass through the simulated uplink, and drive a ControlLoop at the control
// rate on the wall clock. State snapshots go out at state_hz.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "wbt/session.hpp"

namespace wbt::live {

struct LiveConfig {
  gateway::SessionConfig session;
  std::string address{"127.0.0.1"};
  unsigned short port{8765};  // 0 picks a free port
  double state_hz{30.0};
  std::filesystem::path record_path;         // record every session here when set
  std::filesystem::path record_dir{"."};     // target of client record toggles
};

struct LiveStats {
  std::uint64_t sessions{0};
  std::uint64_t messages_in{0};
  std::uint64_t states_out{0};
  std::uint64_t records_written{0};
};

class LiveServer {
 public:
  explicit LiveServer(LiveConfig cfg);
  ~LiveServer();
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  /// Binds and starts the I/O thread. Returns the bound port.
  unsigned short start();
  /// Closes the listener and any session; flushes an open record file.
  void stop();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();

  [[nodiscard]] LiveStats stats() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wbt::live
