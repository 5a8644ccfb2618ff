#include "wbt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "wbt/controller.hpp"
#include "wbt/curriculum.hpp"
#include "wbt/errors.hpp"
#include "wbt/randomization.hpp"
#include "wbt/reward.hpp"
#include "wbt/rng.hpp"
#include "wbt/session.hpp"
#include "wbt/symmetry.hpp"

namespace wbt::harness {

namespace {

// Presets loaded once per batch and shared read-only by the workers.
struct Prepared {
  std::shared_ptr<const robot::RobotDescription> desc;
  reward::RewardConfig reward;
  rand::RandomizationConfig randomization;
  sym::MirrorSpec mirror;
};

Prepared prepare(const std::string& robot_name, const std::string& preset, const std::filesystem::path& data_dir) {
  Prepared p;
  p.desc = std::make_shared<const robot::RobotDescription>(robot::load_robot(robot_name, data_dir));
  p.reward = reward::load_reward_preset(preset.empty() ? p.desc->name : preset, data_dir);
  p.randomization = rand::load_default_randomization(data_dir);
  p.mirror = sym::MirrorSpec::from(*p.desc);
  return p;
}

gateway::EpisodeConfig episode_config(const Prepared& p, plant::TorqueLaw law, bool randomize, bool perfect,
                                      bool terms, std::uint64_t seed) {
  gateway::EpisodeConfig e;
  e.desc = p.desc;
  e.plant = plant::PlantConfig::for_robot(*p.desc);
  e.plant.torque_law = law;
  e.reward = p.reward;
  e.randomization = p.randomization;
  e.randomize = randomize;
  e.perfect_tracking = perfect;
  e.record_terms = terms;
  e.seed = seed;
  return e;
}

std::uint64_t env_seed(std::uint64_t seed, std::size_t env) { return mix_seed(seed, 0x100000000ULL + env); }

metrics::EpisodeMetrics run_prepared(const EvalConfig& cfg, const Prepared& p, std::size_t env) {
  const auto& desc = *p.desc;
  const std::uint64_t seed = env_seed(cfg.seed, env);
  gateway::Episode ep(episode_config(p, cfg.torque_law, cfg.randomize, cfg.perfect_tracking, false, seed));
  curriculum::Scheduler sched(desc, curriculum::ScheduleConfig::for_robot(desc), seed);

  const double hz = ep.config().plant.control_hz;
  const auto ticks = static_cast<std::int64_t>(std::llround(cfg.seconds * hz));
  const auto sym_every = std::max<std::int64_t>(1, std::llround(cfg.symmetry_interval_s * hz));
  const auto law = cfg.torque_law;

  // The scripted servo acts on the newest frame of the flattened history.
  const auto frame_size = obs::FrameLayout::of(desc).size();
  const sym::PolicyFn policy = [&desc, law, frame_size](std::span<const double> flat) {
    obs::ObservationFrame f{obs::FrameLayout::of(desc),
                            std::vector<double>(flat.end() - static_cast<std::ptrdiff_t>(frame_size), flat.end())};
    return control::servo_action(desc, f, law);
  };
  const sym::ValueFn value = [](std::span<const double>) { return 0.0; };

  metrics::Accumulator acc;
  double sym_sum = 0.0;
  std::size_t sym_n = 0;
  for (std::int64_t k = 0; k < ticks; ++k) {
    const auto out = sched.tick(cfg.rho_a);
    const auto rec = ep.tick(out.command, out.upper);
    acc.add(rec);
    if (rec.terminated) break;
    if (k % sym_every == 0) {
      sym_sum += sym::symmetry_losses(policy, value, ep.history(), p.mirror).actor;
      ++sym_n;
    }
  }
  auto m = acc.finish(cfg.seconds);
  if (sym_n > 0) m.symmetry_loss = sym_sum / static_cast<double>(sym_n);
  return m;
}

std::array<double, kColumns.size()> columns_of(const metrics::EpisodeMetrics& m) {
  return {m.lin_vel_err, m.ang_vel_err, m.height_err, m.symmetry_loss.value_or(0.0), m.living_time};
}

}  // namespace

Stat mean_sd(std::span<const double> values) {
  if (values.empty()) return {};
  auto kahan = [&](auto term) {
    double sum = 0.0;
    double c = 0.0;
    for (double v : values) {
      const double y = term(v) - c;
      const double t = sum + y;
      c = (t - sum) - y;
      sum = t;
    }
    return sum;
  };
  const auto n = static_cast<double>(values.size());
  Stat s;
  s.mean = kahan([](double v) { return v; }) / n;
  if (values.size() > 1) {
    const double ss = kahan([m = s.mean](double v) { return (v - m) * (v - m); });
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

metrics::EpisodeMetrics run_env(const EvalConfig& cfg, std::size_t env_index) {
  return run_prepared(cfg, prepare(cfg.robot, cfg.reward_preset, cfg.data_dir), env_index);
}

EvalReport eval_batch(const EvalConfig& cfg) {
  if (cfg.n_envs == 0) throw ConfigError("eval-batch: n_envs must be at least 1");
  if (!(cfg.seconds > 0.0)) throw ConfigError("eval-batch: seconds must be positive");
  if (!(cfg.rho_a >= 0.0 && cfg.rho_a <= 1.0)) throw ConfigError("eval-batch: rho_a must lie in [0, 1]");

  const auto start = std::chrono::steady_clock::now();
  const Prepared prepared = prepare(cfg.robot, cfg.reward_preset, cfg.data_dir);

  EvalReport rep;
  rep.config = cfg;
  rep.episodes.resize(cfg.n_envs);
  unsigned threads = cfg.threads != 0 ? cfg.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.n_envs));
  rep.threads = threads;

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.n_envs; i = next++) {
      try {
        rep.episodes[i] = run_prepared(cfg, prepared, i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    std::vector<double> col(cfg.n_envs);
    for (std::size_t i = 0; i < cfg.n_envs; ++i) col[i] = columns_of(rep.episodes[i])[c];
    rep.stats[c] = mean_sd(col);
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::string format_table(const EvalReport& r) {
  std::ostringstream ss;
  ss << "robot " << r.config.robot << ", " << r.config.n_envs << " envs x " << r.config.seconds
     << " s, rho_a " << r.config.rho_a << ", seed " << r.config.seed
     << (r.config.perfect_tracking ? ", perfect-tracking stub" : "") << '\n';
  ss << std::left << std::setw(16) << "metric" << std::right << std::setw(14) << "mean" << std::setw(14) << "sd"
     << '\n';
  ss << std::scientific << std::setprecision(6);
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    ss << std::left << std::setw(16) << kColumns[c] << std::right << std::setw(14) << r.stats[c].mean
       << std::setw(14) << r.stats[c].sd << '\n';
  }
  return ss.str();
}

std::string format_csv(const EvalReport& r) {
  std::ostringstream ss;
  ss << "env";
  for (auto c : kColumns) ss << ',' << c;
  ss << ",ticks\n";
  ss << std::setprecision(17);
  for (std::size_t i = 0; i < r.episodes.size(); ++i) {
    ss << i;
    for (double v : columns_of(r.episodes[i])) ss << ',' << v;
    ss << ',' << r.episodes[i].ticks << '\n';
  }
  return ss.str();
}

double ks_statistic(std::vector<double>& samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

std::vector<KsRow> dist_check(const std::vector<double>& rho_values, std::size_t samples, std::uint64_t seed) {
  if (samples < 10000) throw ConfigError("dist-check: at least 10000 samples are required");
  std::vector<KsRow> rows;
  std::vector<double> xs(samples);
  for (std::size_t r = 0; r < rho_values.size(); ++r) {
    const double rho = rho_values[r];
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("dist-check: rho_a must lie in [0, 1]");
    Rng rng(mix_seed(seed, r), RngStream::curriculum);
    for (auto& x : xs) x = curriculum::sample_rho_prime(rho, rng.uniform());
    KsRow row{rho, samples, 0.0, 0.0};
    row.ks_cdf = ks_statistic(xs, [rho](double x) { return curriculum::cdf(rho, x); });
    row.ks_uniform = ks_statistic(xs, [](double x) { return std::clamp(x, 0.0, 1.0); });
    rows.push_back(row);
  }
  return rows;
}

std::string dist_check_json(const std::vector<KsRow>& rows) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : rows) {
    a.push_back({{"rho_a", r.rho_a}, {"samples", r.samples}, {"ks_cdf", r.ks_cdf}, {"ks_uniform", r.ks_uniform}});
  }
  return nlohmann::json{{"format", "wbt-dist-check"}, {"version", 1}, {"rows", a}}.dump(2);
}

std::string reward_dump_csv(const DumpConfig& cfg) {
  if (!(cfg.seconds > 0.0)) throw ConfigError("reward-dump: seconds must be positive");
  const Prepared p = prepare(cfg.robot, cfg.reward_preset, cfg.data_dir);
  const auto& desc = *p.desc;
  gateway::Episode ep(episode_config(p, plant::TorqueLaw::literal, false, false, true, cfg.seed));
  curriculum::Scheduler sched(desc, curriculum::ScheduleConfig::for_robot(desc), cfg.seed);
  const auto ticks = static_cast<std::int64_t>(std::llround(cfg.seconds * ep.config().plant.control_hz));

  std::ostringstream ss;
  ss << "tick,t,total";
  for (auto t : reward::all_terms()) ss << ',' << reward::to_string(t);
  ss << '\n' << std::setprecision(17);
  for (std::int64_t k = 0; k < ticks; ++k) {
    const auto out = sched.tick(cfg.rho_a);
    const auto rec = ep.tick(out.command, out.upper);
    ss << rec.tick << ',' << rec.t << ',' << rec.reward;
    for (double v : rec.terms) ss << ',' << v;
    ss << '\n';
    if (rec.terminated) break;
  }
  return ss.str();
}

}  // namespace wbt::harness
