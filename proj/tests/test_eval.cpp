#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "saferl/envs/point_env.hpp"
#include "saferl/eval/eval.hpp"
#include "saferl/nn/checkpoint.hpp"
#include "saferl/nn/gaussian_policy.hpp"
#include "saferl/nn/mlp.hpp"
#include "saferl/train/loops.hpp"
#include "saferl/util/errors.hpp"
#include "saferl/util/rng.hpp"

using namespace saferl;
using attack::AttackConfig;
using attack::AttackKind;
using eval::AttackResources;
using eval::EpisodeStats;

namespace {

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool same_returns(const EpisodeStats& a, const EpisodeStats& b) {
  if (a.episode_rewards.size() != b.episode_rewards.size()) return false;
  for (std::size_t i = 0; i < a.episode_rewards.size(); ++i) {
    if (!same_bits(a.episode_rewards[i], b.episode_rewards[i])) return false;
    if (!same_bits(a.episode_costs[i], b.episode_costs[i])) return false;
  }
  return same_bits(a.reward_mean, b.reward_mean) &&
         same_bits(a.cost_mean, b.cost_mean) &&
         same_bits(a.reward_std, b.reward_std) &&
         same_bits(a.cost_std, b.cost_std);
}

envs::EnvSpec short_run() {
  envs::EnvSpec spec = envs::EnvSpec::run_default();
  spec.episode_len = 20;
  return spec;
}

// Random policy plus matching critics, wired into one resource struct.
struct Harness {
  nn::GaussianPolicy policy;
  nn::Mlp q_r, q_c, value_c;

  explicit Harness(const envs::EnvSpec& spec, std::uint64_t seed = 42) {
    Rng rng(seed);
    const int obs = spec.obs_dim();
    policy = nn::GaussianPolicy::create(obs, {8}, 2, rng);
    q_r = nn::Mlp::create({obs + 2, 8, 1}, rng);
    q_c = nn::Mlp::create({obs + 2, 8, 1}, rng);
    value_c = nn::Mlp::create({obs, 8, 1}, rng);
  }

  AttackResources nets() const {
    AttackResources r;
    r.policy = &policy;
    r.q_r = &q_r;
    r.q_c = &q_c;
    r.value_c = &value_c;
    return r;
  }
};

AttackConfig fast_attack(double eps) {
  AttackConfig cfg;
  cfg.epsilon = eps;
  cfg.steps = 10;
  return cfg;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("evaluation is deterministic in the seed") {
  const envs::EnvSpec spec = short_run();
  const Harness h(spec);
  const AttackConfig acfg = fast_attack(0.03);

  const EpisodeStats a =
      eval::evaluate(spec, h.nets(), AttackKind::kRandom, acfg, 4, 11);
  const EpisodeStats b =
      eval::evaluate(spec, h.nets(), AttackKind::kRandom, acfg, 4, 11);
  CHECK(a.episode_rewards.size() == 4);
  CHECK(same_returns(a, b));

  const EpisodeStats c =
      eval::evaluate(spec, h.nets(), AttackKind::kRandom, acfg, 4, 12);
  CHECK_FALSE(same_returns(a, c));
}

TEST_CASE("zero-radius attacks reproduce the natural rollouts exactly") {
  const envs::EnvSpec spec = short_run();
  const Harness h(spec);
  const EpisodeStats natural = eval::evaluate(
      spec, h.nets(), AttackKind::kNone, fast_attack(0.0), 5, 3);

  for (const AttackKind kind :
       {AttackKind::kRandom, AttackKind::kMad, AttackKind::kAmad,
        AttackKind::kMc, AttackKind::kMr}) {
    const EpisodeStats attacked =
        eval::evaluate(spec, h.nets(), kind, fast_attack(0.0), 5, 3);
    CAPTURE(attack::to_string(kind));
    CHECK(same_returns(natural, attacked));
  }
}

TEST_CASE("population statistics match a direct recomputation") {
  const envs::EnvSpec spec = short_run();
  const Harness h(spec);
  const EpisodeStats st = eval::evaluate(
      spec, h.nets(), AttackKind::kRandom, fast_attack(0.05), 6, 21);

  const auto n = static_cast<double>(st.episode_rewards.size());
  double mean = 0.0;
  for (const double r : st.episode_rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (const double r : st.episode_rewards) var += (r - mean) * (r - mean);
  CHECK(st.reward_mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(st.reward_std == doctest::Approx(std::sqrt(var / n)).epsilon(1e-12));
}

TEST_CASE("near-deterministic idle policy earns nothing and stays safe") {
  const envs::EnvSpec spec = short_run();
  Rng rng(5);
  nn::GaussianPolicy idle;
  idle.mean_net = nn::Mlp::zeros({spec.obs_dim(), 2});
  idle.log_std.assign(2, -9.0);

  AttackResources nets;
  nets.policy = &idle;
  const EpisodeStats st = eval::evaluate(spec, nets, AttackKind::kNone,
                                         fast_attack(0.0), 5, 0);
  CHECK(std::abs(st.reward_mean) < 0.1);
  CHECK(st.cost_mean == 0.0);
}

TEST_CASE("gate percentile endpoints reduce to all-attack and no-attack") {
  const envs::EnvSpec spec = short_run();
  const Harness h(spec);

  AttackConfig everything = fast_attack(0.05);
  everything.amad_xi = 1.0;
  const EpisodeStats gated_all =
      eval::evaluate(spec, h.nets(), AttackKind::kAmad, everything, 4, 7);
  const EpisodeStats ungated =
      eval::evaluate(spec, h.nets(), AttackKind::kMad, everything, 4, 7);
  CHECK(same_returns(gated_all, ungated));

  AttackConfig nothing = fast_attack(0.05);
  nothing.amad_xi = 0.0;
  const EpisodeStats gated_none =
      eval::evaluate(spec, h.nets(), AttackKind::kAmad, nothing, 4, 7);
  const EpisodeStats natural = eval::evaluate(
      spec, h.nets(), AttackKind::kNone, fast_attack(0.0), 4, 7);
  CHECK(same_returns(gated_none, natural));
}

TEST_CASE("missing networks and bad arguments are rejected") {
  const envs::EnvSpec spec = short_run();
  const Harness h(spec);
  const AttackConfig acfg = fast_attack(0.05);

  AttackResources none;
  CHECK_THROWS_AS(
      eval::evaluate(spec, none, AttackKind::kNone, acfg, 2, 0), InputError);

  AttackResources bare;
  bare.policy = &h.policy;
  CHECK_THROWS_AS(eval::evaluate(spec, bare, AttackKind::kMc, acfg, 2, 0),
                  InputError);
  CHECK_THROWS_AS(eval::evaluate(spec, bare, AttackKind::kMr, acfg, 2, 0),
                  InputError);
  CHECK_THROWS_AS(eval::evaluate(spec, bare, AttackKind::kAmad, acfg, 2, 0),
                  InputError);
  CHECK_THROWS_AS(
      eval::evaluate(spec, h.nets(), AttackKind::kNone, acfg, 0, 0),
      InputError);

  envs::EnvSpec circle = envs::EnvSpec::circle_default();
  circle.episode_len = 10;
  CHECK_THROWS_AS(
      eval::evaluate(circle, h.nets(), AttackKind::kNone, acfg, 2, 0),
      SizeError);
}

TEST_CASE("environment faults carry the failing episode index") {
  const envs::EnvSpec spec = short_run();
  nn::GaussianPolicy broken;
  broken.mean_net = nn::Mlp::zeros({spec.obs_dim(), 2});
  broken.mean_net.biases[0][0] = std::numeric_limits<double>::quiet_NaN();
  broken.log_std.assign(2, -0.5);

  AttackResources nets;
  nets.policy = &broken;
  try {
    eval::evaluate(spec, nets, AttackKind::kNone, fast_attack(0.0), 3, 0);
    FAIL("expected a fault");
  } catch (const FaultError& e) {
    CHECK(std::string(e.what()).find("(episode 0)") != std::string::npos);
  }
}

TEST_CASE("sweep emits natural baselines and consistent gap metrics") {
  const envs::EnvSpec spec = short_run();
  const Harness h(spec);

  eval::SweepConfig cfg;
  cfg.env = spec;
  cfg.method = "demo";
  cfg.attackers = {AttackKind::kRandom};
  cfg.eps_grid = {0.0, 0.03};
  cfg.episodes = 3;
  cfg.seeds = {0, 1};
  cfg.attack = fast_attack(0.0);

  const std::vector<eval::SweepRecord> rows = eval::attack_sweep(cfg, h.nets());
  REQUIRE(rows.size() == 6);

  for (std::size_t base = 0; base < rows.size(); base += 3) {
    const eval::SweepRecord& nat = rows[base];
    CHECK(nat.attacker == "natural");
    CHECK(nat.j_effect == 0.0);
    CHECK(nat.j_stealth == 0.0);

    const eval::SweepRecord& zero = rows[base + 1];
    CHECK(zero.attacker == "random");
    CHECK(zero.eps == 0.0);
    CHECK(same_returns(zero.stats, nat.stats));
    CHECK(zero.j_effect == 0.0);
    CHECK(zero.j_stealth == 0.0);

    const eval::SweepRecord& hit = rows[base + 2];
    CHECK(hit.eps == 0.03);
    CHECK(same_bits(hit.j_effect, hit.stats.cost_mean - nat.stats.cost_mean));
    CHECK(same_bits(hit.j_stealth,
                    hit.stats.reward_mean - nat.stats.reward_mean));
  }

  eval::SweepConfig bad = cfg;
  bad.method.clear();
  CHECK_THROWS_AS(eval::attack_sweep(bad, h.nets()), InputError);
  bad = cfg;
  bad.attackers = {AttackKind::kNone};
  CHECK_THROWS_AS(eval::attack_sweep(bad, h.nets()), InputError);
  bad = cfg;
  bad.eps_grid = {-0.1};
  CHECK_THROWS_AS(eval::attack_sweep(bad, h.nets()), InputError);
  bad = cfg;
  bad.eps_grid = {0.03, 0.0};
  CHECK_THROWS_AS(eval::attack_sweep(bad, h.nets()), InputError);
}

TEST_CASE("sweep table formats stay parseable and self-describing") {
  const envs::EnvSpec spec = short_run();
  const Harness h(spec);

  eval::SweepConfig cfg;
  cfg.env = spec;
  cfg.method = "demo";
  cfg.attackers = {AttackKind::kRandom};
  cfg.eps_grid = {0.02};
  cfg.episodes = 3;
  cfg.seeds = {0};
  cfg.attack = fast_attack(0.0);
  const std::vector<eval::SweepRecord> rows = eval::attack_sweep(cfg, h.nets());

  std::ostringstream csv;
  eval::write_sweep_csv(rows, csv);
  const std::vector<std::string> csv_lines = lines_of(csv.str());
  REQUIRE(csv_lines.size() == rows.size() + 1);
  CHECK(csv_lines[0] ==
        "schema_version,method,attacker,eps,seed,episodes,reward_mean,"
        "reward_std,cost_mean,cost_std,j_effect,j_stealth");
  CHECK(csv_lines[1].substr(0, 2) == "1,");

  std::ostringstream jsonl;
  eval::write_sweep_jsonl(rows, jsonl);
  const std::vector<std::string> json_lines = lines_of(jsonl.str());
  REQUIRE(json_lines.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const nlohmann::json j = nlohmann::json::parse(json_lines[i]);
    CHECK(j.at("schema_version").get<int>() == eval::kSchemaVersion);
    CHECK(j.at("method").get<std::string>() == "demo");
    const auto rewards = j.at("episode_rewards").get<std::vector<double>>();
    REQUIRE(rewards.size() == rows[i].stats.episode_rewards.size());
    for (std::size_t k = 0; k < rewards.size(); ++k) {
      CHECK(same_bits(rewards[k], rows[i].stats.episode_rewards[k]));
    }
    CHECK(same_bits(j.at("reward_mean").get<double>(),
                    rows[i].stats.reward_mean));
  }
}

TEST_CASE("method comparison tolerates absent checkpoints") {
  const envs::EnvSpec spec = short_run();
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "saferl_eval_compare";
  std::filesystem::create_directories(dir);

  train::RunConfig rcfg;
  rcfg.env = spec;
  train::TrainResult base;
  {
    Rng rng(1);
    const int obs = spec.obs_dim();
    base.policy = nn::GaussianPolicy::create(obs, {8}, 2, rng);
    base.value_r = nn::Mlp::create({obs, 8, 1}, rng);
    base.value_c = nn::Mlp::create({obs, 8, 1}, rng);
    base.q_r = nn::Mlp::create({obs + 2, 8, 1}, rng);
    base.q_c = nn::Mlp::create({obs + 2, 8, 1}, rng);
  }
  const std::string ck_a = (dir / "a.json").string();
  const std::string ck_b = (dir / "b.json").string();
  train::make_checkpoint(base, rcfg).save(ck_a);
  train::make_checkpoint(base, rcfg).save(ck_b);

  eval::CompareConfig cfg;
  cfg.env = spec;
  cfg.methods = {{"other", ck_a},
                 {"ppol-vanilla", ck_b},
                 {"ghost", (dir / "missing.json").string()}};
  cfg.attackers = {AttackKind::kRandom};
  cfg.eps = 0.02;
  cfg.episodes = 2;
  cfg.seeds = {0, 1};
  cfg.attack = fast_attack(0.0);

  const eval::CompareResult result = eval::compare_methods(cfg);
  REQUIRE(result.rows.size() == 3);
  CHECK(result.reference == "ppol-vanilla");

  const eval::CompareRow& other = result.rows[0];
  CHECK(other.present);
  REQUIRE(other.cells.size() == 2);
  CHECK(other.cells[0].attacker == "natural");
  CHECK(other.cells[0].eps == 0.0);
  CHECK(other.cells[1].attacker == "random");
  CHECK(other.cells[1].eps == 0.02);
  // Identical checkpoints pool to identical natural values, so neither
  // present method can fall below the threshold.
  CHECK_FALSE(other.failing);
  CHECK_FALSE(result.rows[1].failing);

  const eval::CompareRow& ghost = result.rows[2];
  CHECK_FALSE(ghost.present);
  CHECK(ghost.cells.empty());

  // Natural cells pool over seeds x episodes with matching statistics.
  EpisodeStats pooled;
  AttackResources nets;
  const train::PolicyBundle bundle =
      train::load_bundle(nn::Checkpoint::load(ck_a));
  nets.policy = &bundle.policy;
  for (const std::uint64_t seed : {0ULL, 1ULL}) {
    const EpisodeStats st = eval::evaluate(
        spec, nets, AttackKind::kNone, fast_attack(0.0), 2, seed);
    pooled.episode_rewards.insert(pooled.episode_rewards.end(),
                                  st.episode_rewards.begin(),
                                  st.episode_rewards.end());
  }
  double mean = 0.0;
  for (const double r : pooled.episode_rewards) mean += r;
  mean /= static_cast<double>(pooled.episode_rewards.size());
  CHECK(other.cells[0].reward_mean == doctest::Approx(mean).epsilon(1e-12));

  std::ostringstream csv;
  eval::write_compare_csv(result, csv);
  const std::vector<std::string> csv_lines = lines_of(csv.str());
  REQUIRE(csv_lines.size() == 1 + 2 + 2 + 1);
  CHECK(csv_lines.back().find("ghost,0,0,missing") != std::string::npos);

  std::ostringstream jsonl;
  eval::write_compare_jsonl(result, jsonl);
  const std::vector<std::string> json_lines = lines_of(jsonl.str());
  REQUIRE(json_lines.size() == 3);
  for (const std::string& line : json_lines) {
    const nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.at("reference").get<std::string>() == "ppol-vanilla");
  }
  CHECK_FALSE(nlohmann::json::parse(json_lines[2]).at("present").get<bool>());

  std::filesystem::remove_all(dir);
}

TEST_CASE("comparison config round-trips through json") {
  eval::CompareConfig cfg;
  cfg.env = short_run();
  cfg.methods = {{"a", "/tmp/a.json"}, {"b", "/tmp/b.json"}};
  cfg.attackers = {AttackKind::kMc, AttackKind::kMr};
  cfg.eps = 0.04;
  cfg.episodes = 7;
  cfg.seeds = {3, 4};
  cfg.attack.steps = 25;

  const eval::CompareConfig back =
      eval::CompareConfig::from_json(cfg.to_json());
  CHECK(back.methods.size() == 2);
  CHECK(back.methods[1].name == "b");
  CHECK(back.attackers == cfg.attackers);
  CHECK(back.eps == 0.04);
  CHECK(back.episodes == 7);
  CHECK(back.seeds == cfg.seeds);
  CHECK(back.attack.steps == 25);
  CHECK(back.env.episode_len == 20);

  eval::CompareConfig dup = cfg;
  dup.methods = {{"a", "x"}, {"a", "y"}};
  CHECK_THROWS_AS(dup.validate(), InputError);
}

TEST_CASE("verification battery holds on random instances") {
  const std::vector<eval::VerifyCheck> checks = eval::verify_battery(3, 9001);
  REQUIRE(checks.size() == 3 * 12);

  int failures = 0;
  for (const eval::VerifyCheck& c : checks) {
    if (!c.holds) ++failures;
    CHECK(c.instance_id >= 0);
    CHECK(c.instance_id < 3);
  }
  CHECK(failures == 0);

  // Identical calls reproduce identical numbers.
  const std::vector<eval::VerifyCheck> again = eval::verify_battery(3, 9001);
  REQUIRE(again.size() == checks.size());
  for (std::size_t i = 0; i < checks.size(); ++i) {
    CHECK(checks[i].check == again[i].check);
    CHECK(same_bits(checks[i].lhs, again[i].lhs));
    CHECK(same_bits(checks[i].rhs, again[i].rhs));
  }

  std::ostringstream jsonl;
  eval::write_verify_jsonl(checks, jsonl);
  const std::vector<std::string> lines = lines_of(jsonl.str());
  REQUIRE(lines.size() == checks.size());
  const nlohmann::json j = nlohmann::json::parse(lines[0]);
  CHECK(j.at("check").get<std::string>() == "contraction_policy");
  CHECK(j.at("holds").get<bool>());

  CHECK_THROWS_AS(eval::verify_battery(0, 1), InputError);
}
