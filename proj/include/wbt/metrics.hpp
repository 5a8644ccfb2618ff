#pragma once

// Episode tracking metrics computed from tick records.

#include <optional>
#include <vector>

#include "wbt/session.hpp"

namespace wbt::metrics {

struct EpisodeMetrics {
  // Errors pair each state with the command applied on the tick before it.
  double lin_vel_err{0.0};    // mean |v_cmd,x - v_x|
  double lin_vel_err_y{0.0};  // mean |v_y| (no lateral command)
  double ang_vel_err{0.0};    // mean |w_cmd - w|
  double height_err{0.0};     // mean |h_cmd - h|
  double living_time{0.0};    // s; last record time if terminated, else the cap
  std::optional<double> symmetry_loss;
  std::size_t ticks{0};
};

/// Throws EmptyEpisode for an empty record list.
[[nodiscard]] EpisodeMetrics compute(const std::vector<gateway::TickRecord>& records, double cap_seconds);

/// Streaming form used by batch evaluation; no records are retained.
class Accumulator {
 public:
  void add(const gateway::TickRecord& r);
  [[nodiscard]] EpisodeMetrics finish(double cap_seconds) const;

 private:
  double lin_{0.0};
  double lin_y_{0.0};
  double ang_{0.0};
  double height_{0.0};
  std::size_t n_{0};        // command/state pairs
  std::size_t records_{0};
  Command prev_{};
  bool terminated_{false};
  double last_t_{0.0};
};

}  // namespace wbt::metrics
