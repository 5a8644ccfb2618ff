#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "wbt/errors.hpp"
#include "wbt/golden.hpp"
#include "wbt/harness.hpp"
#include "wbt/reward.hpp"

using namespace wbt;

namespace {

harness::EvalConfig small(std::size_t n, double seconds) {
  harness::EvalConfig c;
  c.n_envs = n;
  c.seconds = seconds;
  c.seed = 5;
  c.threads = 1;
  c.data_dir = test::data_dir();
  return c;
}

void replace_in(const std::filesystem::path& p, const std::string& from, const std::string& to) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  auto text = ss.str();
  const auto at = text.find(from);
  REQUIRE(at != std::string::npos);
  text.replace(at, from.size(), to);
  in.close();
  std::ofstream(p) << text;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  return out;
}

}  // namespace

TEST_CASE("mean and sample deviation") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto s = harness::mean_sd(v);
  CHECK(s.mean == 2.5);
  CHECK(s.sd == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  const std::vector<double> one{7.0};
  CHECK(harness::mean_sd(one).sd == 0.0);
}

TEST_CASE("ks statistic of a perfect grid") {
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back((i + 0.5) / 1000.0);
  CHECK(harness::ks_statistic(xs, [](double x) { return x; }) == doctest::Approx(0.0005).epsilon(1e-9));
}

TEST_CASE("evaluation table has the five columns") {
  const auto r = harness::eval_batch(small(4, 2.0));
  const auto table = harness::format_table(r);
  for (auto c : harness::kColumns) CHECK(table.find(std::string(c)) != std::string::npos);
  CHECK(r.episodes.size() == 4);
  const auto csv = split(harness::format_csv(r), '\n');
  CHECK(csv.size() == 5);
  CHECK(split(csv[0], ',').size() == split(csv[1], ',').size());
}

TEST_CASE("same seed, same table") {
  const auto a = harness::eval_batch(small(6, 3.0));
  const auto b = harness::eval_batch(small(6, 3.0));
  CHECK(harness::format_table(a) == harness::format_table(b));
  CHECK(harness::format_csv(a) == harness::format_csv(b));
  auto other = small(6, 3.0);
  other.seed = 6;
  CHECK(harness::format_csv(harness::eval_batch(other)) != harness::format_csv(a));
}

TEST_CASE("results do not depend on the thread count") {
  auto c = small(7, 2.0);
  c.randomize = true;
  const auto one = harness::eval_batch(c);
  c.threads = 3;
  const auto three = harness::eval_batch(c);
  CHECK(three.threads == 3);
  CHECK(harness::format_csv(one) == harness::format_csv(three));
  for (std::size_t i = 0; i < one.stats.size(); ++i) {
    CHECK(test::bits_of(one.stats[i].mean) == test::bits_of(three.stats[i].mean));
    CHECK(test::bits_of(one.stats[i].sd) == test::bits_of(three.stats[i].sd));
  }
  const auto env4 = harness::run_env(c, 4);
  CHECK(env4.lin_vel_err == one.episodes[4].lin_vel_err);
  CHECK(env4.height_err == one.episodes[4].height_err);
}

TEST_CASE("a perfect tracker scores zero error") {
  auto c = small(5, 20.0);
  c.perfect_tracking = true;
  const auto r = harness::eval_batch(c);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.stats[i].mean == 0.0);
    CHECK(r.stats[i].sd == 0.0);
  }
  CHECK(r.stats[4].mean == 20.0);
  CHECK(r.stats[4].sd == 0.0);
}

TEST_CASE("batch config errors") {
  CHECK_THROWS_AS((void)harness::eval_batch(small(0, 1.0)), ConfigError);
  CHECK_THROWS_AS((void)harness::eval_batch(small(2, 0.0)), ConfigError);
  auto c = small(2, 1.0);
  c.robot = "h1";
  CHECK_THROWS_AS((void)harness::eval_batch(c), NotFound);
  CHECK_THROWS_AS((void)harness::dist_check({1.5}, 10000, 1), ConfigError);
}

TEST_CASE("golden tables match the shipped presets") {
  const auto r = golden::verify(test::data_dir());
  CHECK(r.ok());
  CHECK(r.tables.size() == 6);
  for (const auto& t : r.tables) CHECK(t.rows_checked > 0);
  CHECK(golden::format_report(r).find("all match") != std::string::npos);
}

TEST_CASE("a tampered weight is reported by name") {
  test::TempDir dir("golden");
  std::filesystem::copy(test::data_dir(), dir.path(), std::filesystem::copy_options::recursive);
  replace_in(dir / "rewards" / "g1.json", "\"torque_limits\": -0.1", "\"torque_limits\": -0.2");
  const auto r = golden::verify(dir.path());
  CHECK_FALSE(r.ok());
  std::vector<golden::Mismatch> all;
  for (const auto& t : r.tables) all.insert(all.end(), t.mismatches.begin(), t.mismatches.end());
  REQUIRE(all.size() == 1);
  CHECK(all[0].table == "reward_weights");
  CHECK(all[0].robot == "g1");
  CHECK(all[0].row == "torque_limits");
  CHECK(all[0].expected == "-0.1");
  CHECK(all[0].describe().find("torque_limits") != std::string::npos);
  CHECK(golden::format_report(r).find("MISMATCH") != std::string::npos);
}

TEST_CASE("torque limit weights differ between robots") {
  const auto g1 = reward::load_reward_preset("g1", test::data_dir());
  const auto gr1 = reward::load_reward_preset("gr1", test::data_dir());
  CHECK(g1.weights[reward::Term::torque_limits] == -0.1);
  CHECK(gr1.weights[reward::Term::torque_limits] == -0.2);
}

TEST_CASE("a missing golden file is a config error") {
  test::TempDir dir("golden-missing");
  std::filesystem::copy(test::data_dir(), dir.path(), std::filesystem::copy_options::recursive);
  std::filesystem::remove(dir / "golden" / "key_parameters.json");
  CHECK_THROWS_AS((void)golden::verify(dir.path()), ConfigError);
}

TEST_CASE("reward dump columns") {
  harness::DumpConfig c;
  c.seconds = 1.0;
  c.data_dir = test::data_dir();
  const auto lines = split(harness::reward_dump_csv(c), '\n');
  REQUIRE(lines.size() >= 2);
  const auto header = split(lines[0], ',');
  REQUIRE(header.size() == 3 + reward::kTermCount);
  CHECK(header[0] == "tick");
  CHECK(header[2] == "total");
  CHECK(header[3] == "tracking_lin_vel_x");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = split(lines[i], ',');
    REQUIRE(row.size() == header.size());
    double sum = 0.0;
    for (std::size_t k = 3; k < row.size(); ++k) sum += std::stod(row[k]);
    CHECK(std::stod(row[2]) == doctest::Approx(sum).epsilon(1e-9));
  }
}
