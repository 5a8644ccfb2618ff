#include "wbt/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "wbt/errors.hpp"

namespace wbt::metrics {

void Accumulator::add(const gateway::TickRecord& r) {
  // Record k holds the state reached under the command applied at tick k - 1.
  if (records_ > 0) {
    lin_ += std::abs(prev_.v_x - r.base_vel[0]);
    lin_y_ += std::abs(r.base_vel[1]);
    ang_ += std::abs(prev_.yaw_rate - r.yaw_rate);
    height_ += std::abs(prev_.height - r.base_height);
    ++n_;
  }
  prev_ = r.cmd;
  ++records_;
  terminated_ = r.terminated;
  last_t_ = r.t;
}

EpisodeMetrics Accumulator::finish(double cap_seconds) const {
  if (records_ == 0) throw EmptyEpisode("no records to compute metrics from");
  const auto n = static_cast<double>(std::max<std::size_t>(n_, 1));
  EpisodeMetrics m;
  m.lin_vel_err = lin_ / n;
  m.lin_vel_err_y = lin_y_ / n;
  m.ang_vel_err = ang_ / n;
  m.height_err = height_ / n;
  m.living_time = terminated_ ? last_t_ : cap_seconds;
  m.ticks = records_;
  return m;
}

EpisodeMetrics compute(const std::vector<gateway::TickRecord>& records, double cap_seconds) {
  Accumulator acc;
  for (const auto& r : records) acc.add(r);
  return acc.finish(cap_seconds);
}

}  // namespace wbt::metrics
