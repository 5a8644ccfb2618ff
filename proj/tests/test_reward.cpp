#include <doctest.h>

#include <cmath>
#include <fstream>

#include "support.hpp"
#include "wbt/errors.hpp"
#include "wbt/plant.hpp"
#include "wbt/reward.hpp"

using namespace wbt;
using reward::Term;

namespace {

struct Fixture {
  std::shared_ptr<const robot::RobotDescription> desc = test::shared(test::g1());
  plant::PlantModel model{desc, plant::PlantConfig{}, plant::Perturbation::identity(desc->n_joints())};
  RobotState state = model.initial_state();
  RobotState prev = model.initial_state();
  std::vector<double> a = state.last_action;

  reward::RewardInputs inputs(const Command& cmd) const {
    reward::RewardInputs in;
    in.state = &state;
    in.prev = &prev;
    in.cmd = cmd;
    in.a_t = a;
    in.a_prev = a;
    in.a_prev2 = a;
    return in;
  }
};

reward::RewardConfig preset(const char* name) { return reward::load_reward_preset(name, test::data_dir()); }

}  // namespace

TEST_CASE("r_knee zero cases") {
  CHECK(reward::r_knee(0.6, 0.6, 1.3, 0.0, 2.0) == 0.0);
  CHECK(reward::r_knee(0.5, 0.7, 1.0, 0.0, 2.0) == 0.0);
}

TEST_CASE("r_knee arithmetic") {
  // n = 0.75 on [0, 2] is q = 1.5.
  CHECK(reward::r_knee(0.7, 0.6, 1.5, 0.0, 2.0) == doctest::Approx(-0.025).epsilon(1e-12));
  CHECK(reward::r_knee(0.5, 0.6, 1.5, 0.0, 2.0) == doctest::Approx(-0.025).epsilon(1e-12));
}

TEST_CASE("r_knee rejects a collapsed knee range") {
  CHECK_THROWS_AS((void)reward::r_knee(0.5, 0.6, 1.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("r_knee averages over the knees") {
  const auto& d = test::g1();
  std::vector<double> q(d.n_joints(), 0.0);
  const auto& l = d.joints[d.legs[0].knee];
  const auto& r = d.joints[d.legs[1].knee];
  q[d.legs[0].knee] = l.pos_min + 0.75 * (l.pos_max - l.pos_min);
  q[d.legs[1].knee] = r.pos_min + 0.5 * (r.pos_max - r.pos_min);
  CHECK(reward::r_knee(d, 0.7, 0.6, q) == doctest::Approx(-0.0125).epsilon(1e-12));
}

TEST_CASE("stand still gate") {
  CHECK(reward::stand_still_gate({0.0, 0.0, 0.74}));
  CHECK_FALSE(reward::stand_still_gate({0.3, 0.0, 0.74}, 0.05));
  CHECK(reward::stand_still_gate({0.04, -0.04, 0.6}, 0.05));
  CHECK_FALSE(reward::stand_still_gate({0.0, 0.06, 0.6}, 0.05));
}

TEST_CASE("perfect tracking scores one on every tracking term") {
  Fixture f;
  const auto cfg = preset("g1");
  const auto e = reward::evaluate(*f.desc, cfg, f.inputs({0.0, 0.0, f.state.base_height}), {});
  CHECK(e.breakdown[Term::tracking_lin_vel_x].raw == 1.0);
  CHECK(e.breakdown[Term::tracking_lin_vel_y].raw == 1.0);
  CHECK(e.breakdown[Term::tracking_ang_vel].raw == 1.0);
  CHECK(e.breakdown[Term::tracking_base_height].raw == 1.0);
  CHECK(e.breakdown[Term::orientation].raw == 0.0);
}

TEST_CASE("half a metre per second of x error") {
  Fixture f;
  f.state.base_vel[0] = 0.5;
  const auto e = reward::evaluate(*f.desc, preset("g1"), f.inputs({0.0, 0.0, f.state.base_height}), {});
  CHECK(e.breakdown[Term::tracking_lin_vel_x].raw == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(e.breakdown[Term::tracking_lin_vel_x].raw == doctest::Approx(0.367879).epsilon(1e-6));
}

TEST_CASE("tracking terms stay in (0, 1]") {
  Fixture f;
  for (double err : {0.0, 0.1, 0.5, 2.0, 5.0}) {
    f.state.base_vel[0] = err;
    f.state.base_yaw_rate = -err;
    const auto e = reward::evaluate(*f.desc, preset("g1"), f.inputs({0.0, 0.0, f.state.base_height + err}), {});
    for (auto t : {Term::tracking_lin_vel_x, Term::tracking_ang_vel, Term::tracking_base_height}) {
      CHECK(e.breakdown[t].raw > 0.0);
      CHECK(e.breakdown[t].raw <= 1.0);
    }
  }
}

TEST_CASE("preset weights") {
  const auto g1 = preset("g1");
  const auto gr1 = preset("gr1");
  CHECK(g1.weights[Term::tracking_lin_vel_x] == 1.5);
  CHECK(g1.weights[Term::tracking_ang_vel] == 2.0);
  CHECK(gr1.weights[Term::tracking_ang_vel] == 1.0);
  CHECK(g1.weights[Term::torque_limits] == -0.1);
  CHECK(gr1.weights[Term::torque_limits] == -0.2);
  CHECK_THROWS_AS((void)reward::load_reward_preset("h1", test::data_dir()), NotFound);
}

TEST_CASE("total is the weighted sum and swapping presets keeps raw values") {
  Fixture f;
  f.state.base_vel = {0.3, -0.1, 0.05};
  f.state.base_yaw_rate = 0.2;
  f.state.ang_vel = {0.1, -0.2, 0.2};
  f.state.qd[0] = 1.5;
  f.state.tau[3] = 30.0;
  f.state.feet[1].contact = false;
  f.state.feet[1].force = {};
  f.a[2] += 0.1;
  const auto in = f.inputs({0.5, 0.0, 0.6});
  const auto g1 = reward::evaluate(*f.desc, preset("g1"), in, {});
  const auto gr1 = reward::evaluate(*f.desc, preset("gr1"), in, {});
  for (const auto* e : {&g1, &gr1}) {
    double sum = 0.0;
    for (const auto& t : e->breakdown.terms) sum += t.weighted;
    CHECK(e->breakdown.total == doctest::Approx(sum).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < reward::kTermCount; ++i) {
    CHECK(test::bits_of(g1.breakdown.terms[i].raw) == test::bits_of(gr1.breakdown.terms[i].raw));
  }
  CHECK(g1.breakdown[Term::no_fly].raw == 1.0);
}

TEST_CASE("missing states are a ConfigError, wrong sizes a ShapeError") {
  Fixture f;
  auto in = f.inputs({});
  in.prev = nullptr;
  CHECK_THROWS_AS((void)reward::evaluate(*f.desc, preset("g1"), in, {}), ConfigError);
  in = f.inputs({});
  std::vector<double> shortened(f.a.begin(), f.a.end() - 1);
  in.a_t = shortened;
  CHECK_THROWS_AS((void)reward::evaluate(*f.desc, preset("g1"), in, {}), ShapeError);
}

TEST_CASE("air time pays out on the first contact after a flight") {
  Fixture f;
  const auto cfg = preset("g1");
  reward::ContactMemory mem;
  mem.air_time = {0.6, 0.0};
  mem.last_contact = {false, true};
  const auto e = reward::evaluate(*f.desc, cfg, f.inputs({}), mem);
  CHECK(e.breakdown[Term::feet_air_time].raw == doctest::Approx(0.6 + cfg.dt - 0.5).epsilon(1e-12));
  CHECK(e.memory.air_time[0] == 0.0);
}

TEST_CASE("stand still counts feet off the ground only when commanded still") {
  Fixture f;
  f.state.feet[0].contact = false;
  f.state.feet[0].force = {};
  f.state.feet[1].contact = false;
  f.state.feet[1].force = {};
  CHECK(reward::evaluate(*f.desc, preset("g1"), f.inputs({0.0, 0.0, 0.7}), {}).breakdown[Term::stand_still].raw == 2.0);
  CHECK(reward::evaluate(*f.desc, preset("g1"), f.inputs({0.5, 0.0, 0.7}), {}).breakdown[Term::stand_still].raw == 0.0);
}

TEST_CASE("stumble and contact force") {
  Fixture f;
  f.state.feet[0].contact = true;
  f.state.feet[0].force = {400.0, 0.0, 100.0};
  f.state.feet[1].force = {0.0, 0.0, 450.0};
  const auto e = reward::evaluate(*f.desc, preset("g1"), f.inputs({}), {});
  CHECK(e.breakdown[Term::feet_stumble].raw == 1.0);
  CHECK(e.breakdown[Term::feet_contact_force].raw == doctest::Approx(50.0));
}

TEST_CASE("every term name round trips") {
  for (auto t : reward::all_terms()) CHECK(reward::term_from_string(reward::to_string(t)) == t);
  CHECK_FALSE(reward::term_from_string("not_a_term").has_value());
}

TEST_CASE("a reward file must weight every term") {
  std::ifstream in(test::data_dir() / "rewards" / "g1.json");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK_NOTHROW((void)reward::parse_reward_config(text));
  const auto at = text.find("\"stand_still\"");
  REQUIRE(at != std::string::npos);
  text.replace(at, 13, "\"stand_stil\"");
  CHECK_THROWS_AS((void)reward::parse_reward_config(text), ConfigError);
}

TEST_CASE("the tracker carries contact memory between ticks") {
  Fixture f;
  reward::RewardTracker tr(*f.desc, preset("g1"));
  f.state.feet[0].contact = false;
  (void)tr.step(f.inputs({}));
  (void)tr.step(f.inputs({}));
  CHECK(tr.memory().air_time[0] > 0.0);
  tr.reset();
  CHECK(tr.memory().air_time[0] == 0.0);
}
