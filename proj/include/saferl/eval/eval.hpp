#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "saferl/attack/attackers.hpp"
#include "saferl/envs/point_env.hpp"
#include "saferl/nn/gaussian_policy.hpp"
#include "saferl/nn/mlp.hpp"

namespace saferl::eval {

inline constexpr int kSchemaVersion = 1;

// Frozen networks an evaluation-time adversary reads. Gradient attackers
// need the matching critics; the high-risk gate needs the cost value net.
struct AttackResources {
  const nn::GaussianPolicy* policy = nullptr;
  const nn::Mlp* q_r = nullptr;
  const nn::Mlp* q_c = nullptr;
  const nn::Mlp* value_c = nullptr;
};

struct EpisodeStats {
  std::vector<double> episode_rewards;
  std::vector<double> episode_costs;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double cost_mean = 0.0;
  double cost_std = 0.0;
};

// Rolls the stochastic policy through the corrupted observation stream for
// a fixed number of episodes. Environment jitter, attack randomness and
// action noise each draw from their own per-episode stream derived from
// the seed, so identical calls reproduce identical statistics and the
// attack cannot perturb the noise sequence itself.
EpisodeStats evaluate(const envs::EnvSpec& spec, const AttackResources& nets,
                      attack::AttackKind kind,
                      const attack::AttackConfig& acfg, int episodes,
                      std::uint64_t seed);

struct SweepConfig {
  envs::EnvSpec env;
  std::vector<attack::AttackKind> attackers{
      attack::AttackKind::kRandom, attack::AttackKind::kMad,
      attack::AttackKind::kAmad, attack::AttackKind::kMc,
      attack::AttackKind::kMr};
  std::vector<double> eps_grid{0.0, 0.0125, 0.025, 0.0375, 0.05};
  int episodes = 50;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  attack::AttackConfig attack;  // epsilon is overridden per cell
  std::string method;           // row label in the outputs

  void validate() const;
};

struct SweepRecord {
  std::string method;
  std::string attacker;  // "natural" for the no-attack baseline rows
  double eps = 0.0;
  std::uint64_t seed = 0;
  EpisodeStats stats;
  // Versus the natural row of the same seed.
  double j_effect = 0.0;
  double j_stealth = 0.0;
};

// Full attacker x radius x seed cross product plus one natural row per
// seed.
std::vector<SweepRecord> attack_sweep(const SweepConfig& cfg,
                                      const AttackResources& nets);

void write_sweep_csv(const std::vector<SweepRecord>& rows, std::ostream& os);
// One record per line including the raw per-episode returns.
void write_sweep_jsonl(const std::vector<SweepRecord>& rows, std::ostream& os);

struct CompareConfig {
  envs::EnvSpec env;
  struct Entry {
    std::string name;
    std::string checkpoint;
  };
  std::vector<Entry> methods;
  std::vector<attack::AttackKind> attackers{attack::AttackKind::kAmad,
                                            attack::AttackKind::kMc,
                                            attack::AttackKind::kMr};
  double eps = 0.05;
  int episodes = 50;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  attack::AttackConfig attack;

  void validate() const;
  nlohmann::json to_json() const;
  static CompareConfig from_json(const nlohmann::json& j);
};

struct CompareCell {
  std::string attacker;  // "natural" first
  double eps = 0.0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double cost_mean = 0.0;
  double cost_std = 0.0;
  double j_effect = 0.0;
  double j_stealth = 0.0;
};

struct CompareRow {
  std::string method;
  bool present = false;  // checkpoint was found and loaded
  // Natural reward below 30% of the reference method's.
  bool failing = false;
  std::vector<CompareCell> cells;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::string reference;  // method supplying the 30% baseline
};

// Evaluates every listed checkpoint under the natural setting and each
// attacker, pooling episodes across seeds. Missing checkpoints produce
// absent rows instead of failures.
CompareResult compare_methods(const CompareConfig& cfg);

void write_compare_csv(const CompareResult& result, std::ostream& os);
void write_compare_jsonl(const CompareResult& result, std::ostream& os);

// One verification check over random finite instances.
struct VerifyCheck {
  std::string check;
  int instance_id = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// Re-derives the core value-theory guarantees on freshly sampled instances:
// operator contractions, fixed-point versus brute-force adversary values,
// the adversary's problem solved as its own decision process, temptation
// classification, safety bounds, and the safe-by-optimal-attack criterion.
std::vector<VerifyCheck> verify_battery(int instances, std::uint64_t seed);

void write_verify_jsonl(const std::vector<VerifyCheck>& checks,
                        std::ostream& os);

}  // namespace saferl::eval
