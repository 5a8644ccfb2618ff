#include "wbt/observation.hpp"

#include <algorithm>
#include <string>

#include "wbt/errors.hpp"

namespace wbt::obs {

namespace {

void expect_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(want) + ", got " + std::to_string(got));
  }
}

}  // namespace

ObservationFrame assemble_frame(const FrameLayout& layout, const Command& cmd, const RobotState& state) {
  expect_size(state.q.size(), layout.n_joints, "q");
  expect_size(state.qd.size(), layout.n_joints, "qd");
  expect_size(state.last_action.size(), layout.n_lower, "last_action");

  ObservationFrame f{layout, std::vector<double>(layout.size())};
  auto& v = f.values;
  v[0] = cmd.v_x;
  v[1] = cmd.yaw_rate;
  v[2] = cmd.height;
  std::copy(state.ang_vel.begin(), state.ang_vel.end(), v.begin() + static_cast<std::ptrdiff_t>(layout.ang_vel()));
  std::copy(state.gravity.begin(), state.gravity.end(), v.begin() + static_cast<std::ptrdiff_t>(layout.gravity()));
  std::copy(state.q.begin(), state.q.end(), v.begin() + static_cast<std::ptrdiff_t>(layout.q()));
  std::copy(state.qd.begin(), state.qd.end(), v.begin() + static_cast<std::ptrdiff_t>(layout.qd()));
  std::copy(state.last_action.begin(), state.last_action.end(),
            v.begin() + static_cast<std::ptrdiff_t>(layout.last_action()));
  return f;
}

std::array<double, 2> ground_truth(const RobotState& state) noexcept {
  return {state.base_vel[0], state.base_yaw_rate};
}

ObservationStack::ObservationStack(const ObservationFrame& first) : layout_(first.layout) {
  expect_size(first.values.size(), layout_.size(), "frame");
  ring_.fill(first);
}

void ObservationStack::push(const ObservationFrame& frame) {
  if (!(frame.layout == layout_)) throw ShapeError("frame layout does not match the stack");
  expect_size(frame.values.size(), layout_.size(), "frame");
  ring_[head_] = frame;
  head_ = (head_ + 1) % kHistory;
}

const ObservationFrame& ObservationStack::frame(std::size_t age_from_oldest) const {
  return ring_.at((head_ + age_from_oldest) % kHistory);
}

std::vector<double> ObservationStack::flatten() const {
  std::vector<double> out(kHistory * layout_.size());
  flatten_into(out);
  return out;
}

void ObservationStack::flatten_into(std::span<double> out) const {
  expect_size(out.size(), kHistory * layout_.size(), "flatten buffer");
  auto dst = out.begin();
  for (std::size_t k = 0; k < kHistory; ++k) {
    const auto& vals = frame(k).values;
    dst = std::copy(vals.begin(), vals.end(), dst);
  }
}

ObservationStack push_frame(ObservationStack stack, const ObservationFrame& frame) {
  stack.push(frame);
  return stack;
}

NetShape net_shape(std::size_t n_joints, std::size_t n_lower) {
  if (n_lower == 0) throw DegenerateRobot("robot has no lower-body joints: empty action space");
  if (n_lower > n_joints) throw DegenerateRobot("n_lower exceeds n_joints");
  const std::size_t frame = kHeadDim + 2 * n_joints + n_lower;
  NetShape s;
  s.encoder_in = kHistory * frame;
  s.encoder_out = 35;
  s.target_in = frame;
  s.target_out = 32;
  s.actor_in = s.encoder_out + frame;
  s.actor_out = n_lower;
  s.critic_in = 2 + frame;
  s.critic_out = 1;
  return s;
}

NetShape net_shape(const robot::RobotDescription& desc) { return net_shape(desc.n_joints(), desc.n_lower()); }

}  // namespace wbt::obs
