#include "wbt/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wbt/errors.hpp"
#include "wbt/plant.hpp"

namespace wbt::curriculum {

double lambda(double rho_a) noexcept { return 20.0 * (1.0 - rho_a); }

double sample_rho_prime(double rho_a, double u1) noexcept {
  if (rho_a >= 1.0) return u1;
  const double lam = lambda(rho_a);
  // -ln(1 - u1 * (1 - e^{-lam})) / lam, in cancellation-free form.
  return -std::log1p(u1 * std::expm1(-lam)) / lam;
}

double sample_ratio(double rho_a, double u1, double u2) noexcept { return u2 * sample_rho_prime(rho_a, u1); }

double pdf(double rho_a, double x) noexcept {
  if (x < 0.0 || x > 1.0) return 0.0;
  if (rho_a >= 1.0) return 1.0;
  const double lam = lambda(rho_a);
  return lam * std::exp(-lam * x) / -std::expm1(-lam);
}

double cdf(double rho_a, double x) noexcept {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (rho_a >= 1.0) return x;
  const double lam = lambda(rho_a);
  return std::expm1(-lam * x) / std::expm1(-lam);
}

CurriculumState maybe_promote(const CurriculumState& cur, double mean_xvel_reward) noexcept {
  CurriculumState next = cur;
  if (mean_xvel_reward >= cur.threshold) next.rho_a = std::min(1.0, cur.rho_a + cur.step);
  return next;
}

Promoter::Promoter(CurriculumState state, std::size_t window) : state_(state), window_(std::max<std::size_t>(1, window)) {}

std::optional<PromotionEvent> Promoter::observe(double batch_mean_xvel_reward) {
  recent_.push_back(batch_mean_xvel_reward);
  if (recent_.size() > window_) recent_.pop_front();
  const double mean = std::accumulate(recent_.begin(), recent_.end(), 0.0) / static_cast<double>(recent_.size());
  const auto next = maybe_promote(state_, mean);
  if (next.rho_a == state_.rho_a) return std::nullopt;
  PromotionEvent ev{state_.rho_a, next.rho_a, mean};
  state_ = next;
  recent_.clear();
  return ev;
}

ScheduleConfig ScheduleConfig::for_robot(const robot::RobotDescription& desc) {
  ScheduleConfig c;
  c.pose_interval = desc.intervals.pose_resample;
  c.command_interval = desc.intervals.command_resample;
  return c;
}

double map_ratio(const robot::JointSpec& spec, double a, double sign) noexcept {
  const double reach = std::max(spec.pos_max - spec.default_pos, spec.default_pos - spec.pos_min);
  return spec.limits().clamp(spec.default_pos + sign * a * reach);
}

namespace {

std::int64_t to_ticks(double seconds, double hz, const char* what) {
  const auto n = std::llround(seconds * hz);
  if (n < 1) throw ConfigError(std::string("schedule: ") + what + " shorter than one control tick");
  return n;
}

}  // namespace

Scheduler::Scheduler(const robot::RobotDescription& desc, ScheduleConfig cfg, std::uint64_t seed)
    : desc_(&desc),
      cfg_(cfg),
      rng_(seed, RngStream::curriculum),
      pose_ticks_(to_ticks(cfg.pose_interval, cfg.control_hz, "pose interval")),
      cmd_ticks_(to_ticks(cfg.command_interval, cfg.control_hz, "command interval")),
      ramp_ticks_(to_ticks(cfg.ramp_duration, cfg.control_hz, "ramp duration")) {
  if (cfg.squat_probability < 0.0 || cfg.squat_probability > 1.0) {
    throw ConfigError("schedule: squat probability outside [0, 1]");
  }
  const std::size_t n = desc.n_upper();
  ratios_.assign(n, 0.0);
  emitted_.resize(n);
  for (std::size_t k = 0; k < n; ++k) emitted_[k] = desc.joints[desc.upper_indices[k]].default_pos;
  ramp_from_ = emitted_;
  ramp_to_ = emitted_;
}

void Scheduler::draw_pose(double rho_a) {
  ramp_from_ = emitted_;
  for (std::size_t k = 0; k < ratios_.size(); ++k) {
    const double u1 = rng_.uniform();
    const double u2 = rng_.uniform();
    const double sign = rng_.bernoulli(0.5) ? 1.0 : -1.0;
    ratios_[k] = sample_ratio(rho_a, u1, u2);
    ramp_to_[k] = map_ratio(desc_->joints[desc_->upper_indices[k]], ratios_[k], sign);
  }
}

void Scheduler::draw_command() {
  squat_ = rng_.bernoulli(cfg_.squat_probability);
  if (squat_) {
    const auto h = desc_->height_command_range();
    command_ = {0.0, 0.0, rng_.uniform(h.lo, h.hi)};
  } else {
    const auto& r = desc_->cmd_ranges;
    const double vx = rng_.uniform(r.lin_vel_x.lo, r.lin_vel_x.hi);
    const double yaw = rng_.uniform(r.ang_vel_yaw.lo, r.ang_vel_yaw.hi);
    command_ = {vx, yaw, desc_->height_target_walk};
  }
}

TickOutput Scheduler::tick(double rho_a) {
  const std::int64_t k = next_tick_++;
  TickOutput out;
  out.tick = k;
  out.t = static_cast<double>(k) / cfg_.control_hz;

  auto ramp_at = [this](std::int64_t at) {
    const auto step = static_cast<int>(std::min(at - ramp_start_, ramp_ticks_));
    return plant::interpolate_upper(ramp_from_, ramp_to_, step, static_cast<int>(ramp_ticks_));
  };

  if (k == 0) {
    draw_pose(rho_a);
    draw_command();
    ramp_start_ = 0;
  } else {
    if (k % pose_ticks_ == 0) {
      emitted_ = ramp_at(k);
      draw_pose(rho_a);
      ramp_start_ = k;
      out.resample_pose = true;
    }
    if (k % cmd_ticks_ == 0) {
      draw_command();
      out.resample_command = true;
    }
  }
  emitted_ = ramp_at(k);
  out.upper = emitted_;
  out.command = command_;
  out.squat = squat_;
  return out;
}

}  // namespace wbt::curriculum
