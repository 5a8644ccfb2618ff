#include "wbt/golden.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "json_util.hpp"
#include "wbt/randomization.hpp"
#include "wbt/reward.hpp"

namespace wbt::golden {

using detail::json;

namespace {

constexpr const char* kRobots[] = {"g1", "gr1"};

// Golden cells are either "x" or ["lo", "hi"]; preset values are one or two doubles.
using Values = std::vector<double>;
using Lookup = std::function<std::optional<Values>(const std::string& row)>;

double parse_printed(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) throw ConfigError(where + ": unparseable golden value '" + s + "'");
  return v;
}

std::string printed(const json& cell) {
  if (cell.is_string()) return cell.get<std::string>();
  std::string out = "[";
  for (std::size_t i = 0; i < cell.size(); ++i) out += (i ? ", " : "") + cell[i].get<std::string>();
  return out + "]";
}

std::string shown(const Values& v) {
  std::ostringstream ss;
  ss.precision(17);
  if (v.size() == 1) {
    ss << v[0];
  } else {
    ss << '[';
    for (std::size_t i = 0; i < v.size(); ++i) ss << (i ? ", " : "") << v[i];
    ss << ']';
  }
  return ss.str();
}

Values expected_values(const json& cell, const std::string& where) {
  if (cell.is_string()) return {parse_printed(cell.get<std::string>(), where)};
  if (!cell.is_array()) throw ConfigError(where + ": golden cell must be a string or a list of strings");
  Values v;
  for (const auto& c : cell) {
    if (!c.is_string()) throw ConfigError(where + ": golden cell must be a string or a list of strings");
    v.push_back(parse_printed(c.get<std::string>(), where));
  }
  return v;
}

json load_golden(const std::filesystem::path& dir, const std::string& table) {
  const auto path = dir / (table + ".json");
  std::string text;
  try {
    text = detail::read_text_file(path);
  } catch (const NotFound&) {
    throw ConfigError("golden file missing: " + path.string());
  }
  json doc = detail::parse_json(text, path.string());
  detail::check_header(doc, "wbt-golden", 1);
  if (detail::require<std::string>(doc, "table", path.string()) != table) {
    throw ConfigError(path.string() + ": table name does not match the file name");
  }
  if (!doc.contains("rows") || !doc.at("rows").is_object()) throw ConfigError(path.string() + ": missing 'rows'");
  return doc;
}

Values range(const robot::Range& r) { return {r.lo, r.hi}; }

Lookup reward_lookup(const reward::RewardConfig& cfg) {
  return [cfg](const std::string& row) -> std::optional<Values> {
    auto t = reward::term_from_string(row);
    if (!t) return std::nullopt;
    return Values{cfg.weights[*t]};
  };
}

Lookup randomization_lookup(const rand::RandomizationConfig& c) {
  const std::map<std::string, robot::Range> rows{
      {"actuation_offset", c.actuation_offset}, {"torso_payload", c.torso_payload},
      {"hand_payload", c.hand_payload},         {"com_displacement", c.com_displacement},
      {"link_mass", c.link_mass},               {"friction", c.friction},
      {"restitution", c.restitution},           {"kp", c.kp},
      {"kd", c.kd},                             {"init_pos_scale", c.init_pos_scale},
      {"init_pos_offset", c.init_pos_offset},   {"push_vel", c.push_vel},
      {"obs_dof_pos", c.obs_dof_pos},           {"obs_dof_vel", c.obs_dof_vel},
      {"obs_ang_vel", c.obs_ang_vel},           {"obs_gravity", c.obs_gravity}};
  return [rows](const std::string& row) -> std::optional<Values> {
    auto it = rows.find(row);
    if (it == rows.end()) return std::nullopt;
    return range(it->second);
  };
}

Lookup key_parameter_lookup(const robot::RobotDescription& d, const reward::RewardParams& p) {
  const std::map<std::string, Values> rows{
      {"height_target_walk", {d.height_target_walk}},
      {"lin_vel_x", range(d.cmd_ranges.lin_vel_x)},
      {"lin_vel_y", range(d.cmd_ranges.lin_vel_y)},
      {"ang_vel_yaw", range(d.cmd_ranges.ang_vel_yaw)},
      {"squat_height_range", range(d.squat_height_range)},
      {"soft_pos_limit", {p.soft_pos_limit}},
      {"soft_vel_limit", {p.soft_vel_limit}},
      {"soft_torque_limit", {p.soft_torque_limit}},
      {"max_contact_force", {p.max_contact_force}},
      {"d_min_feet", {p.d_min_feet}},
      {"d_min_knee", {p.d_min_knee}},
      {"d_max_feet", {p.d_max_feet}},
      {"d_max_knee", {p.d_max_knee}},
      {"clearance_target", {p.clearance_target}},
      {"push_interval", {d.intervals.push}},
      {"pose_resample_interval", {d.intervals.pose_resample}},
      {"command_resample_interval", {d.intervals.command_resample}}};
  return [rows](const std::string& row) -> std::optional<Values> {
    auto it = rows.find(row);
    if (it == rows.end()) return std::nullopt;
    return it->second;
  };
}

TableResult check(const json& doc, const std::string& table, const std::string& robot, const Lookup& lookup,
                  const std::vector<std::string>& required_rows) {
  TableResult res{table, robot, 0, {}};
  const auto& rows = doc.at("rows");
  for (const auto& [row, cells] : rows.items()) {
    const std::string where = table + "/" + robot + "/" + row;
    if (!cells.contains(robot)) throw ConfigError(where + ": golden row has no column for this robot");
    const auto& cell = cells.at(robot);
    const Values want = expected_values(cell, where);
    ++res.rows_checked;
    const auto got = lookup(row);
    if (!got) {
      res.mismatches.push_back({table, robot, row, printed(cell), "<no such parameter>"});
    } else if (*got != want) {
      res.mismatches.push_back({table, robot, row, printed(cell), shown(*got)});
    }
  }
  for (const auto& r : required_rows) {
    if (!rows.contains(r)) res.mismatches.push_back({table, robot, r, "<missing golden row>", "-"});
  }
  return res;
}

}  // namespace

std::string Mismatch::describe() const {
  return table + "/" + robot + "/" + row + ": expected " + expected + ", got " + actual;
}

bool Report::ok() const noexcept {
  for (const auto& t : tables) {
    if (!t.ok()) return false;
  }
  return true;
}

Report verify(const std::filesystem::path& data_dir, const std::filesystem::path& golden_dir) {
  const auto dir = golden_dir.empty() ? data_dir / "golden" : golden_dir;
  const json weights = load_golden(dir, "reward_weights");
  const json ranges = load_golden(dir, "randomization_ranges");
  const json keys = load_golden(dir, "key_parameters");

  std::vector<std::string> all_terms;
  for (auto t : reward::all_terms()) all_terms.emplace_back(reward::to_string(t));
  const auto randomization = rand::load_default_randomization(data_dir);

  Report rep;
  for (const char* name : kRobots) {
    const auto desc = robot::load_preset(name, data_dir);
    const auto rcfg = reward::load_reward_preset(name, data_dir);
    rep.tables.push_back(check(weights, "reward_weights", name, reward_lookup(rcfg), all_terms));
    rep.tables.push_back(check(ranges, "randomization_ranges", name, randomization_lookup(randomization), {}));
    rep.tables.push_back(check(keys, "key_parameters", name, key_parameter_lookup(desc, rcfg.params), {}));
  }
  return rep;
}

std::string format_report(const Report& r) {
  std::ostringstream ss;
  for (const auto& t : r.tables) {
    ss << (t.ok() ? "PASS " : "FAIL ") << t.table << " [" << t.robot << "] " << t.rows_checked << " rows\n";
    for (const auto& m : t.mismatches) ss << "  " << m.describe() << '\n';
  }
  ss << (r.ok() ? "golden tables: all match\n" : "golden tables: MISMATCH\n");
  return ss.str();
}

}  // namespace wbt::golden
