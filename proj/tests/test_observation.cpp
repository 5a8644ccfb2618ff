#include <doctest.h>

#include <numeric>
#include <random>

#include "support.hpp"
#include "wbt/errors.hpp"
#include "wbt/observation.hpp"

using namespace wbt;
using obs::FrameLayout;

namespace {

RobotState zero_state(std::size_t n_joints, std::size_t n_lower) {
  RobotState s;
  s.q.assign(n_joints, 0.0);
  s.qd.assign(n_joints, 0.0);
  s.last_action.assign(n_lower, 0.0);
  return s;
}

obs::ObservationFrame numbered(const FrameLayout& l, double base) {
  obs::ObservationFrame f{l, std::vector<double>(l.size())};
  std::iota(f.values.begin(), f.values.end(), base);
  return f;
}

}  // namespace

TEST_CASE("frame length for four joints, two lower") {
  const FrameLayout l{4, 2};
  CHECK(l.size() == 19);
  const auto f = obs::assemble_frame(l, {}, zero_state(4, 2));
  CHECK(f.values.size() == 19);
}

TEST_CASE("zero state frame is zero apart from height and gravity") {
  const FrameLayout l{4, 2};
  const auto f = obs::assemble_frame(l, {0.0, 0.0, 0.74}, zero_state(4, 2));
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (i == 2) {
      CHECK(f.values[i] == 0.74);
    } else if (i == 8) {
      CHECK(f.values[i] == -1.0);
    } else {
      CHECK(f.values[i] == 0.0);
    }
  }
}

TEST_CASE("frame order is command, body rate, gravity, q, qd, last action") {
  const FrameLayout l{4, 2};
  RobotState s = zero_state(4, 2);
  s.ang_vel = {0.1, 0.2, 0.3};
  s.gravity = {0.0, 0.6, -0.8};
  s.q = {1, 2, 3, 4};
  s.qd = {5, 6, 7, 8};
  s.last_action = {9, 10};
  const auto f = obs::assemble_frame(l, {0.5, -0.2, 0.7}, s);
  const std::vector<double> want{0.5, -0.2, 0.7, 0.1, 0.2, 0.3, 0.0, 0.6, -0.8, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(f.values == want);
  CHECK(f.q()[3] == 4.0);
  CHECK(f.qd()[0] == 5.0);
  CHECK(f.last_action()[1] == 10.0);
}

TEST_CASE("assembly is pure") {
  RobotState s = zero_state(4, 2);
  s.q = {0.3, -0.1, 0.2, 0.0};
  const FrameLayout l{4, 2};
  CHECK(obs::assemble_frame(l, {0.1, 0.2, 0.6}, s) == obs::assemble_frame(l, {0.1, 0.2, 0.6}, s));
}

TEST_CASE("mismatched state arrays raise ShapeError") {
  const FrameLayout l{4, 2};
  CHECK_THROWS_AS((void)obs::assemble_frame(l, {}, zero_state(5, 2)), ShapeError);
  CHECK_THROWS_AS((void)obs::assemble_frame(l, {}, zero_state(4, 3)), ShapeError);
}

TEST_CASE("a fresh stack repeats the first frame six times") {
  const FrameLayout l{4, 2};
  const auto f = numbered(l, 1.0);
  const obs::ObservationStack st(f);
  const auto flat = st.flatten();
  REQUIRE(flat.size() == 114);
  for (std::size_t k = 0; k < obs::kHistory; ++k) {
    for (std::size_t i = 0; i < l.size(); ++i) CHECK(flat[k * l.size() + i] == f.values[i]);
  }
}

TEST_CASE("stack flattens oldest first and slides") {
  const FrameLayout l{4, 2};
  obs::ObservationStack st(numbered(l, 0.0));
  for (int k = 1; k <= 6; ++k) st = obs::push_frame(st, numbered(l, 100.0 * k));
  auto flat = st.flatten();
  for (std::size_t k = 0; k < 6; ++k) CHECK(flat[k * l.size()] == 100.0 * static_cast<double>(k + 1));

  st.push(numbered(l, 700.0));
  flat = st.flatten();
  for (std::size_t k = 0; k < 6; ++k) CHECK(flat[k * l.size()] == 100.0 * static_cast<double>(k + 2));
  CHECK(st.latest().values[0] == 700.0);
}

TEST_CASE("pushing a frame of another layout is a ShapeError") {
  obs::ObservationStack st(numbered(FrameLayout{4, 2}, 0.0));
  CHECK_THROWS_AS(st.push(numbered(FrameLayout{5, 2}, 0.0)), ShapeError);
}

TEST_CASE("net shape for four joints, two lower") {
  const auto s = obs::net_shape(4, 2);
  CHECK(s.encoder_in == 114);
  CHECK(s.actor_in == 54);
  CHECK(s.critic_in == 21);
  CHECK(s.actor_out == 2);
  CHECK(s.encoder_out == 35);
  CHECK(s.target_out == 32);
  CHECK(s.proto == std::array<std::size_t, 2>{64, 32});
}

TEST_CASE("no lower joints is a DegenerateRobot") {
  CHECK_THROWS_AS((void)obs::net_shape(4, 0), DegenerateRobot);
}

TEST_CASE("net shape invariants for random joint counts") {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t nj = std::uniform_int_distribution<std::size_t>(1, 80)(gen);
    const std::size_t nl = std::uniform_int_distribution<std::size_t>(1, nj)(gen);
    const auto s = obs::net_shape(nj, nl);
    CHECK(s.encoder_in == 6 * (9 + 2 * nj + nl));
    CHECK(s.actor_in == 35 + 9 + 2 * nj + nl);
    CHECK(s.critic_in == 2 + 9 + 2 * nj + nl);
    CHECK(s.actor_out == nl);
    CHECK(s.encoder_out == 35);
    CHECK(s.target_out == 32);
  }
}

TEST_CASE("g1 preset shape by hand") {
  // 41 joints, 12 lower: 9 + 82 + 12 = 103 per frame.
  const auto s = obs::net_shape(test::g1());
  CHECK(s.encoder_in == 618);
  CHECK(s.actor_in == 138);
  CHECK(s.critic_in == 105);
  CHECK(s.actor_out == 12);
}

TEST_CASE("ground truth pair") {
  RobotState s;
  s.base_vel = {0.4, 0.1, 0.0};
  s.base_yaw_rate = -0.3;
  CHECK(obs::ground_truth(s) == std::array<double, 2>{0.4, -0.3});
}
