#include <doctest.h>

#include <fstream>

#include "support.hpp"
#include "wbt/errors.hpp"
#include "wbt/robot_model.hpp"

using namespace wbt;
using robot::JointGroup;
using robot::RobotDescription;

namespace {

robot::JointSpec joint(std::string name, JointGroup g, robot::Side side) {
  robot::JointSpec j;
  j.name = std::move(name);
  j.group = g;
  j.side = side;
  j.pos_min = -1.0;
  j.pos_max = 1.0;
  j.vel_max = 10.0;
  j.torque_max = 50.0;
  j.kp = 40.0;
  j.kd = 1.0;
  return j;
}

bool names_field(const std::vector<robot::Violation>& v, const std::string& needle) {
  for (const auto& x : v) {
    if (x.field.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("presets carry the tabulated scalars") {
  const auto& g1 = test::g1();
  CHECK(g1.height_target_walk == 0.74);
  CHECK(g1.cmd_ranges.lin_vel_x.lo == -0.80);
  CHECK(g1.cmd_ranges.lin_vel_x.hi == 1.20);

  const auto& gr1 = test::gr1();
  CHECK(gr1.height_target_walk == 0.90);
  CHECK(gr1.cmd_ranges.ang_vel_yaw.lo == -1.00);
  CHECK(gr1.cmd_ranges.ang_vel_yaw.hi == 1.00);
}

TEST_CASE("preset joint inventories") {
  const auto& g1 = test::g1();
  CHECK(g1.n_lower() == 12);
  CHECK(g1.arm_indices.size() == 14);
  CHECK(g1.hand_indices.size() == 14);
  CHECK(g1.n_upper() == 29);
  CHECK(g1.n_joints() == 41);

  const auto& gr1 = test::gr1();
  CHECK(gr1.n_lower() == 12);
  CHECK(gr1.arm_indices.size() == 14);
  CHECK(gr1.hand_indices.size() == 12);
  CHECK(gr1.n_upper() == 29);
}

TEST_CASE("unknown preset is NotFound") {
  CHECK_THROWS_AS((void)robot::load_preset("h1", test::data_dir()), NotFound);
}

TEST_CASE("presets validate clean") {
  CHECK(robot::validate(test::g1()).empty());
  CHECK(robot::validate(test::gr1()).empty());
}

TEST_CASE("mirror permutation on a two-joint pitch pair") {
  RobotDescription d;
  d.joints = {joint("left_hip_pitch", JointGroup::lower, robot::Side::left),
              joint("right_hip_pitch", JointGroup::lower, robot::Side::right)};
  d.mirror_map.pairs.push_back({0, 1, robot::SignRule::keep});
  const auto m = robot::mirror_index_permutation(d);
  CHECK(m.perm == std::vector<std::size_t>{1, 0});
  CHECK(m.signs == std::vector<double>{1.0, 1.0});
}

TEST_CASE("mirror permutation on a single waist yaw") {
  RobotDescription d;
  d.joints = {joint("waist_yaw", JointGroup::waist, robot::Side::center)};
  d.mirror_map.centers.push_back({0, robot::SignRule::flip});
  const auto m = robot::mirror_index_permutation(d);
  CHECK(m.perm == std::vector<std::size_t>{0});
  CHECK(m.signs == std::vector<double>{-1.0});
}

TEST_CASE("preset mirror permutations are involutions that keep groups") {
  for (const auto* d : {&test::g1(), &test::gr1()}) {
    const auto m = robot::mirror_index_permutation(*d);
    for (std::size_t i = 0; i < d->n_joints(); ++i) {
      CHECK(m.perm[m.perm[i]] == i);
      CHECK(m.signs[i] * m.signs[m.perm[i]] == 1.0);
      CHECK(d->joints[i].group == d->joints[m.perm[i]].group);
    }
  }
}

TEST_CASE("knees are lower joints") {
  for (const auto* d : {&test::g1(), &test::gr1()}) {
    REQUIRE(d->knee_indices.size() == 2);
    for (auto k : d->knee_indices) CHECK(d->joints[k].group == JointGroup::lower);
  }
}

TEST_CASE("collapsed limits give exactly one violation naming the joint") {
  auto d = test::g1();
  d.joints[3].pos_max = d.joints[3].pos_min;
  const auto v = robot::validate(d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field.find(d.joints[3].name) != std::string::npos);
}

TEST_CASE("an unpaired left joint gives one mirror violation") {
  auto d = test::g1();
  d.joints.push_back(joint("left_extra", JointGroup::upper_arm, robot::Side::left));
  robot::finalize(d);
  const auto v = robot::validate(d);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field.find("mirror_map") != std::string::npos);
  CHECK(v[0].field.find("left_extra") != std::string::npos);
}

TEST_CASE("other invariant violations are named") {
  auto d = test::g1();
  d.joints[0].kp = 0.0;
  d.joints[1].kd = -1.0;
  d.joints[2].default_pos = 10.0;
  d.knee_indices.push_back(d.upper_indices.front());
  const auto v = robot::validate(d);
  CHECK(names_field(v, "joints[left_hip_pitch].kp"));
  CHECK(names_field(v, "joints[left_hip_roll].kd"));
  CHECK(names_field(v, "joints[left_hip_yaw].default_pos"));
  CHECK(names_field(v, "knee_indices"));
}

TEST_CASE("mismatched mirror limits are rejected") {
  auto d = test::g1();
  const auto r = *d.find_joint("right_shoulder_roll");
  d.joints[r].pos_min += 0.1;
  CHECK(names_field(robot::validate(d), "right_shoulder_roll"));
}

TEST_CASE("ankle gains carry the scale") {
  const auto& d = test::g1();
  CHECK(d.ankle_kp_scale == 0.8);
  REQUIRE(d.ankle_indices.size() == 4);
  for (auto a : d.ankle_indices) CHECK(d.effective_kp(a) == d.joints[a].kp * 0.8);
  CHECK(d.effective_kp(d.legs[0].knee) == d.joints[d.legs[0].knee].kp);
}

TEST_CASE("printed squat range is kept; the height clamp starts at a fifth of walking height") {
  const auto& d = test::g1();
  CHECK(d.squat_height_range.lo == -0.24);
  const auto r = d.height_command_range();
  CHECK(r.lo == doctest::Approx(0.2 * 0.74).epsilon(1e-15));
  CHECK(r.hi == 0.74);
}

TEST_CASE("descriptions parse from text and reject schema errors") {
  std::ifstream in(test::data_dir() / "robots" / "g1.json");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto d = robot::parse_description(text);
  CHECK(d.n_joints() == 41);

  auto broken = text;
  broken.replace(broken.find("\"wbt-robot\""), 11, "\"wbt-other\"");
  CHECK_THROWS_AS((void)robot::parse_description(broken), ConfigError);
  CHECK_THROWS_AS((void)robot::parse_description("{"), ConfigError);

  auto dup = text;
  dup.replace(dup.find("\"name\": \"right_knee\""), 20, "\"name\": \"left_knee\"");
  CHECK_THROWS_AS((void)robot::parse_description(dup), ConfigError);
}

TEST_CASE("load_robot accepts a file path") {
  const auto d = robot::load_robot((test::data_dir() / "robots" / "gr1.json").string(), test::data_dir());
  CHECK(d.name == "gr1");
}
