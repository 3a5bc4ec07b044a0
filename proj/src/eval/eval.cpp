#include "saferl/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>

#include "saferl/nn/checkpoint.hpp"
#include "saferl/tabular/generate.hpp"
#include "saferl/tabular/ops.hpp"
#include "saferl/tabular/solve.hpp"
#include "saferl/train/loops.hpp"
#include "saferl/util/errors.hpp"
#include "saferl/util/rng.hpp"

namespace saferl::eval {

namespace {

void finalize_stats(EpisodeStats& st) {
  const std::size_t n = st.episode_rewards.size();
  if (n == 0) return;
  double rm = 0.0, cm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rm += st.episode_rewards[i];
    cm += st.episode_costs[i];
  }
  rm /= static_cast<double>(n);
  cm /= static_cast<double>(n);
  double rv = 0.0, cv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = st.episode_rewards[i] - rm;
    const double dc = st.episode_costs[i] - cm;
    rv += dr * dr;
    cv += dc * dc;
  }
  st.reward_mean = rm;
  st.cost_mean = cm;
  st.reward_std = std::sqrt(rv / static_cast<double>(n));
  st.cost_std = std::sqrt(cv / static_cast<double>(n));
}

// Shortest round-trip decimal form, the same encoding the JSON outputs use.
std::string fmt(double v) { return nlohmann::json(v).dump(); }

// Binds one attacker to the frozen networks it reads. Construction fails
// fast when a required network is absent.
class EvalAttacker {
 public:
  EvalAttacker(attack::AttackKind kind, const AttackResources& nets,
               const attack::AttackConfig& cfg, int obs_dim)
      : kind_(kind), cfg_(cfg), policy_(nets.policy) {
    using attack::AttackKind;
    const bool needs_qr = kind == AttackKind::kMr ||
                          kind == AttackKind::kMixed ||
                          kind == AttackKind::kMinReward;
    const bool needs_qc =
        kind == AttackKind::kMc || kind == AttackKind::kMixed;
    if (needs_qr) {
      if (nets.q_r == nullptr) {
        throw InputError("evaluate: attacker needs the reward critic");
      }
      q_r_.emplace(*nets.q_r, obs_dim);
    }
    if (needs_qc) {
      if (nets.q_c == nullptr) {
        throw InputError("evaluate: attacker needs the cost critic");
      }
      q_c_.emplace(*nets.q_c, obs_dim);
    }
    if (kind == AttackKind::kAmad) {
      if (nets.value_c == nullptr) {
        throw InputError("evaluate: gated attacker needs the cost value net");
      }
      v_c_.emplace(*nets.value_c);
    }
  }

  double gate_value(const std::vector<double>& obs) const {
    return v_c_->value(obs);
  }
  void set_threshold(double t) { threshold_ = t; }

  std::vector<double> corrupt(const std::vector<double>& obs, Rng& rng) const {
    using attack::AttackKind;
    switch (kind_) {
      case AttackKind::kNone:
        return obs;
      case AttackKind::kRandom:
        return attack::random_attack(obs, cfg_, rng).corrupted;
      case AttackKind::kMad:
        return attack::mad_attack(obs, *policy_, cfg_, rng).corrupted;
      case AttackKind::kAmad:
        if (gate_value(obs) >= threshold_) {
          return attack::mad_attack(obs, *policy_, cfg_, rng).corrupted;
        }
        return obs;
      case AttackKind::kMc:
        return attack::mc_mr_attack(obs, *policy_, *q_c_, cfg_, true).corrupted;
      case AttackKind::kMr:
        return attack::mc_mr_attack(obs, *policy_, *q_r_, cfg_, true).corrupted;
      case AttackKind::kMixed:
        return attack::mixed_attack(obs, *policy_, *q_r_, *q_c_, cfg_)
            .corrupted;
      case AttackKind::kMinReward:
        return attack::min_reward_attack(obs, *policy_, *q_r_, cfg_).corrupted;
    }
    throw InputError("evaluate: unknown attacker");
  }

 private:
  attack::AttackKind kind_;
  attack::AttackConfig cfg_;
  const nn::GaussianPolicy* policy_;
  std::optional<attack::MlpQAdapter> q_r_, q_c_;
  std::optional<attack::MlpValueAdapter> v_c_;
  // Attack nothing until calibration supplies a percentile.
  double threshold_ = std::numeric_limits<double>::infinity();
};

struct EpisodeReturn {
  double reward = 0.0;
  double cost = 0.0;
};

// Stochastic rollout through the corrupted observation stream. The action
// noise comes from its own stream, so corrupting the observations shifts
// only the means and the identity attack leaves trajectories untouched.
// gate_samples, when given, collects the cost values of the clean states
// visited (used to calibrate the gated attacker on natural trajectories).
EpisodeReturn run_episode(const envs::EnvSpec& spec,
                          const nn::GaussianPolicy& pi,
                          const EvalAttacker& attacker,
                          std::span<const double> scale, Rng& env_rng,
                          Rng& attack_rng, Rng& act_rng,
                          std::vector<double>* gate_samples = nullptr) {
  EpisodeReturn ret;
  envs::EnvState state = envs::reset_state(spec, env_rng);
  std::vector<double> obs;
  bool done = false;
  while (!done) {
    envs::observe(spec, state, obs);
    envs::scale_observation(scale, obs);
    if (gate_samples != nullptr) gate_samples->push_back(attacker.gate_value(obs));
    const std::vector<double> shown = attacker.corrupt(obs, attack_rng);
    const nn::GaussianPolicy::Sample draw = pi.sample(shown, act_rng);
    const envs::StepResult res = envs::step(spec, state, draw.action);
    ret.reward += res.reward;
    ret.cost += res.cost;
    done = res.done;
    state = res.next;
  }
  return ret;
}

// Same percentile rule the batch form of the gated attacker applies. The
// endpoints open or close the gate outright, so out-of-sample states cannot
// slip past a threshold pinned to the calibration extremes.
double percentile_threshold(std::vector<double> values, double xi) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const auto idx = static_cast<std::size_t>(
      std::floor((1.0 - xi) * static_cast<double>(n) + 1e-9));
  if (idx >= n) return std::numeric_limits<double>::infinity();
  if (idx == 0) return -std::numeric_limits<double>::infinity();
  return values[idx];
}

void append_stats(EpisodeStats& pooled, const EpisodeStats& part) {
  pooled.episode_rewards.insert(pooled.episode_rewards.end(),
                                part.episode_rewards.begin(),
                                part.episode_rewards.end());
  pooled.episode_costs.insert(pooled.episode_costs.end(),
                              part.episode_costs.begin(),
                              part.episode_costs.end());
}

nlohmann::json cell_json(const CompareCell& c) {
  return {{"attacker", c.attacker},       {"eps", c.eps},
          {"reward_mean", c.reward_mean}, {"reward_std", c.reward_std},
          {"cost_mean", c.cost_mean},     {"cost_std", c.cost_std},
          {"j_effect", c.j_effect},       {"j_stealth", c.j_stealth}};
}

}  // namespace

EpisodeStats evaluate(const envs::EnvSpec& spec, const AttackResources& nets,
                      attack::AttackKind kind,
                      const attack::AttackConfig& acfg, int episodes,
                      std::uint64_t seed) {
  spec.validate();
  acfg.validate();
  if (episodes <= 0) throw InputError("evaluate: episodes must be positive");
  if (nets.policy == nullptr) throw InputError("evaluate: policy required");
  if (nets.policy->obs_dim() != spec.obs_dim()) {
    throw SizeError("evaluate: policy width does not match the observation");
  }

  const std::vector<double> scale = envs::observation_scale(spec);
  EvalAttacker attacker(kind, nets, acfg, spec.obs_dim());

  if (kind == attack::AttackKind::kAmad) {
    // The gate's percentile comes from clean rollouts on a separate stream,
    // so the attacked episodes stay aligned with the natural ones.
    std::vector<double> samples;
    for (int ep = 0; ep < episodes; ++ep) {
      Rng env_rng(derive_seed(seed, train::streams::kEvalCalibrate, ep));
      Rng act_rng(
          derive_seed(seed, train::streams::kEvalCalibrateAction, ep));
      run_episode(spec, *nets.policy, attacker, scale, env_rng, env_rng,
                  act_rng, &samples);
    }
    attacker.set_threshold(percentile_threshold(samples, acfg.amad_xi));
  }

  EpisodeStats st;
  st.episode_rewards.reserve(episodes);
  st.episode_costs.reserve(episodes);
  for (int ep = 0; ep < episodes; ++ep) {
    Rng env_rng(derive_seed(seed, train::streams::kEvalEnv, ep));
    Rng attack_rng(derive_seed(seed, train::streams::kEvalAttack, ep));
    Rng act_rng(derive_seed(seed, train::streams::kEvalAction, ep));
    try {
      const EpisodeReturn ret = run_episode(spec, *nets.policy, attacker,
                                            scale, env_rng, attack_rng,
                                            act_rng);
      st.episode_rewards.push_back(ret.reward);
      st.episode_costs.push_back(ret.cost);
    } catch (const FaultError& e) {
      throw FaultError(std::string(e.what()) + " (episode " +
                       std::to_string(ep) + ")");
    }
  }
  finalize_stats(st);
  return st;
}

void SweepConfig::validate() const {
  env.validate();
  attack.validate();
  if (method.empty()) throw InputError("sweep: method label required");
  if (episodes <= 0) throw InputError("sweep: episodes must be positive");
  if (seeds.empty()) throw InputError("sweep: need at least one seed");
  if (attackers.empty()) throw InputError("sweep: need at least one attacker");
  for (const attack::AttackKind k : attackers) {
    if (k == attack::AttackKind::kNone) {
      throw InputError("sweep: the natural rows already cover no attack");
    }
  }
  if (eps_grid.empty()) throw InputError("sweep: need at least one radius");
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] >= 0.0)) throw InputError("sweep: radii must be >= 0");
    if (i > 0 && !(eps_grid[i] > eps_grid[i - 1])) {
      throw InputError("sweep: radii must be ascending");
    }
  }
}

std::vector<SweepRecord> attack_sweep(const SweepConfig& cfg,
                                      const AttackResources& nets) {
  cfg.validate();
  std::vector<SweepRecord> out;
  for (const std::uint64_t seed : cfg.seeds) {
    attack::AttackConfig nat_cfg = cfg.attack;
    nat_cfg.epsilon = 0.0;
    SweepRecord nat;
    nat.method = cfg.method;
    nat.attacker = "natural";
    nat.eps = 0.0;
    nat.seed = seed;
    nat.stats = evaluate(cfg.env, nets, attack::AttackKind::kNone, nat_cfg,
                         cfg.episodes, seed);
    out.push_back(nat);
    const EpisodeStats& base = out.back().stats;

    for (const attack::AttackKind kind : cfg.attackers) {
      for (const double eps : cfg.eps_grid) {
        attack::AttackConfig acfg = cfg.attack;
        acfg.epsilon = eps;
        SweepRecord rec;
        rec.method = cfg.method;
        rec.attacker = attack::to_string(kind);
        rec.eps = eps;
        rec.seed = seed;
        rec.stats = evaluate(cfg.env, nets, kind, acfg, cfg.episodes, seed);
        const tabular::AttackMetrics m = tabular::attack_metrics(
            base.reward_mean, base.cost_mean, rec.stats.reward_mean,
            rec.stats.cost_mean);
        rec.j_effect = m.j_effect;
        rec.j_stealth = m.j_stealth;
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

void write_sweep_csv(const std::vector<SweepRecord>& rows, std::ostream& os) {
  os << "schema_version,method,attacker,eps,seed,episodes,reward_mean,"
        "reward_std,cost_mean,cost_std,j_effect,j_stealth\n";
  for (const SweepRecord& r : rows) {
    os << kSchemaVersion << ',' << r.method << ',' << r.attacker << ','
       << fmt(r.eps) << ',' << r.seed << ',' << r.stats.episode_rewards.size()
       << ',' << fmt(r.stats.reward_mean) << ',' << fmt(r.stats.reward_std)
       << ',' << fmt(r.stats.cost_mean) << ',' << fmt(r.stats.cost_std) << ','
       << fmt(r.j_effect) << ',' << fmt(r.j_stealth) << '\n';
  }
}

void write_sweep_jsonl(const std::vector<SweepRecord>& rows,
                       std::ostream& os) {
  for (const SweepRecord& r : rows) {
    const nlohmann::json j{{"schema_version", kSchemaVersion},
                           {"method", r.method},
                           {"attacker", r.attacker},
                           {"eps", r.eps},
                           {"seed", r.seed},
                           {"episodes", r.stats.episode_rewards.size()},
                           {"reward_mean", r.stats.reward_mean},
                           {"reward_std", r.stats.reward_std},
                           {"cost_mean", r.stats.cost_mean},
                           {"cost_std", r.stats.cost_std},
                           {"j_effect", r.j_effect},
                           {"j_stealth", r.j_stealth},
                           {"episode_rewards", r.stats.episode_rewards},
                           {"episode_costs", r.stats.episode_costs}};
    os << j.dump() << '\n';
  }
}

void CompareConfig::validate() const {
  env.validate();
  attack.validate();
  if (methods.empty()) throw InputError("compare: need at least one method");
  std::set<std::string> names;
  for (const Entry& e : methods) {
    if (e.name.empty() || e.checkpoint.empty()) {
      throw InputError("compare: methods need a name and a checkpoint path");
    }
    if (!names.insert(e.name).second) {
      throw InputError("compare: duplicate method name " + e.name);
    }
  }
  if (attackers.empty()) {
    throw InputError("compare: need at least one attacker");
  }
  for (const attack::AttackKind k : attackers) {
    if (k == attack::AttackKind::kNone) {
      throw InputError("compare: the natural column already covers no attack");
    }
  }
  if (!(eps >= 0.0)) throw InputError("compare: eps must be >= 0");
  if (episodes <= 0) throw InputError("compare: episodes must be positive");
  if (seeds.empty()) throw InputError("compare: need at least one seed");
}

nlohmann::json CompareConfig::to_json() const {
  nlohmann::json ms = nlohmann::json::array();
  for (const Entry& e : methods) {
    ms.push_back({{"name", e.name}, {"checkpoint", e.checkpoint}});
  }
  std::vector<std::string> atk;
  atk.reserve(attackers.size());
  for (const attack::AttackKind k : attackers) {
    atk.push_back(attack::to_string(k));
  }
  return {{"env", env.to_json()},
          {"methods", ms},
          {"attackers", atk},
          {"eps", eps},
          {"episodes", episodes},
          {"seeds", seeds},
          {"attack", train::attack_config_to_json(attack)}};
}

CompareConfig CompareConfig::from_json(const nlohmann::json& j) {
  CompareConfig cfg;
  if (j.contains("env")) cfg.env = envs::EnvSpec::from_json(j.at("env"));
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const nlohmann::json& item : j.at("methods")) {
      cfg.methods.push_back({item.at("name").get<std::string>(),
                             item.at("checkpoint").get<std::string>()});
    }
  }
  if (j.contains("attackers")) {
    cfg.attackers.clear();
    for (const nlohmann::json& name : j.at("attackers")) {
      cfg.attackers.push_back(
          attack::attack_kind_from_string(name.get<std::string>()));
    }
  }
  if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
  if (j.contains("episodes")) cfg.episodes = j.at("episodes").get<int>();
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  }
  if (j.contains("attack")) {
    cfg.attack = train::attack_config_from_json(j.at("attack"),
                                                attack::AttackKind::kMc);
  }
  cfg.validate();
  return cfg;
}

CompareResult compare_methods(const CompareConfig& cfg) {
  cfg.validate();
  CompareResult result;

  for (const CompareConfig::Entry& entry : cfg.methods) {
    CompareRow row;
    row.method = entry.name;
    if (!std::filesystem::exists(entry.checkpoint)) {
      result.rows.push_back(std::move(row));
      continue;
    }
    const nn::Checkpoint ck = nn::Checkpoint::load(entry.checkpoint);
    const train::PolicyBundle bundle = train::load_bundle(ck);
    row.present = true;
    AttackResources nets;
    nets.policy = &bundle.policy;
    nets.q_r = &bundle.q_r;
    nets.q_c = &bundle.q_c;
    nets.value_c = &bundle.value_c;

    const auto pooled = [&](attack::AttackKind kind, double eps) {
      attack::AttackConfig acfg = cfg.attack;
      acfg.epsilon = eps;
      EpisodeStats all;
      for (const std::uint64_t seed : cfg.seeds) {
        append_stats(all,
                     evaluate(cfg.env, nets, kind, acfg, cfg.episodes, seed));
      }
      finalize_stats(all);
      return all;
    };

    const EpisodeStats natural = pooled(attack::AttackKind::kNone, 0.0);
    CompareCell nat_cell;
    nat_cell.attacker = "natural";
    nat_cell.eps = 0.0;
    nat_cell.reward_mean = natural.reward_mean;
    nat_cell.reward_std = natural.reward_std;
    nat_cell.cost_mean = natural.cost_mean;
    nat_cell.cost_std = natural.cost_std;
    row.cells.push_back(nat_cell);

    for (const attack::AttackKind kind : cfg.attackers) {
      const EpisodeStats st = pooled(kind, cfg.eps);
      const tabular::AttackMetrics m = tabular::attack_metrics(
          natural.reward_mean, natural.cost_mean, st.reward_mean, st.cost_mean);
      CompareCell cell;
      cell.attacker = attack::to_string(kind);
      cell.eps = cfg.eps;
      cell.reward_mean = st.reward_mean;
      cell.reward_std = st.reward_std;
      cell.cost_mean = st.cost_mean;
      cell.cost_std = st.cost_std;
      cell.j_effect = m.j_effect;
      cell.j_stealth = m.j_stealth;
      row.cells.push_back(cell);
    }
    result.rows.push_back(std::move(row));
  }

  // Reference for the collapse check: the vanilla run when present,
  // otherwise the first method that loaded.
  int ref = -1;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    if (result.rows[i].present && result.rows[i].method == "ppol-vanilla") {
      ref = static_cast<int>(i);
      break;
    }
  }
  if (ref < 0) {
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
      if (result.rows[i].present) {
        ref = static_cast<int>(i);
        break;
      }
    }
  }
  if (ref >= 0) {
    result.reference = result.rows[ref].method;
    const double ref_reward = result.rows[ref].cells.front().reward_mean;
    for (CompareRow& row : result.rows) {
      if (!row.present) continue;
      row.failing = row.cells.front().reward_mean < 0.3 * ref_reward;
    }
  }
  return result;
}

void write_compare_csv(const CompareResult& result, std::ostream& os) {
  os << "schema_version,method,present,failing,attacker,eps,reward_mean,"
        "reward_std,cost_mean,cost_std,j_effect,j_stealth\n";
  for (const CompareRow& row : result.rows) {
    if (!row.present) {
      os << kSchemaVersion << ',' << row.method
         << ",0,0,missing,0,0,0,0,0,0,0\n";
      continue;
    }
    for (const CompareCell& c : row.cells) {
      os << kSchemaVersion << ',' << row.method << ",1,"
         << (row.failing ? 1 : 0) << ',' << c.attacker << ',' << fmt(c.eps)
         << ',' << fmt(c.reward_mean) << ',' << fmt(c.reward_std) << ','
         << fmt(c.cost_mean) << ',' << fmt(c.cost_std) << ','
         << fmt(c.j_effect) << ',' << fmt(c.j_stealth) << '\n';
    }
  }
}

void write_compare_jsonl(const CompareResult& result, std::ostream& os) {
  for (const CompareRow& row : result.rows) {
    nlohmann::json cells = nlohmann::json::array();
    for (const CompareCell& c : row.cells) cells.push_back(cell_json(c));
    const nlohmann::json j{{"schema_version", kSchemaVersion},
                           {"method", row.method},
                           {"present", row.present},
                           {"failing", row.failing},
                           {"reference", result.reference},
                           {"cells", cells}};
    os << j.dump() << '\n';
  }
}

std::vector<VerifyCheck> verify_battery(int instances, std::uint64_t seed) {
  using tabular::Objective;
  if (instances <= 0) throw InputError("verify: instances must be positive");

  std::vector<VerifyCheck> out;
  Rng rng(seed);
  const double gammas[] = {0.5, 0.9};

  for (int i = 0; i < instances; ++i) {
    const int n = rng.uniform_int(2, 4);
    const int a = rng.uniform_int(2, 3);
    const double gamma = gammas[rng.uniform_int(0, 1)];
    const tabular::TabularCmdp m = tabular::random_cmdp(rng, n, a, gamma);
    const tabular::TabularPolicy pi = tabular::random_policy(rng, n, a);
    const tabular::StateBall ball = tabular::random_ball(rng, n, 2);

    tabular::TabularAdversary nu;
    nu.ball = ball;
    nu.mapping.resize(n);
    for (int s = 0; s < n; ++s) {
      const auto& members = ball[s];
      nu.mapping[s] =
          members[rng.uniform_int(0, static_cast<int>(members.size()) - 1)];
    }

    const auto push = [&](const std::string& name, double lhs, double rhs,
                          bool holds) {
      out.push_back({name, i, lhs, rhs, holds});
    };

    const std::uint64_t cseed = rng.next_u64();
    double ratio =
        tabular::check_contraction(m, pi, nu, tabular::OpKind::kPolicy, 20,
                                   cseed);
    push("contraction_policy", ratio, gamma, ratio <= gamma + 1e-9);
    ratio = tabular::check_contraction(
        m, pi, nu, tabular::OpKind::kAdversaryReward, 20, cseed + 1);
    push("contraction_adversary_reward", ratio, gamma, ratio <= gamma + 1e-9);
    ratio = tabular::check_contraction(
        m, pi, nu, tabular::OpKind::kAdversaryCost, 20, cseed + 2);
    push("contraction_adversary_cost", ratio, gamma, ratio <= gamma + 1e-9);

    double strongest_cost = 0.0;
    double brute_cost = 0.0;
    for (const Objective f : {Objective::kReward, Objective::kCost}) {
      const tabular::AdversarySolution fp =
          tabular::optimal_adversary(m, pi, ball, f);
      const tabular::BruteForceResult bf =
          tabular::brute_force_adversary(m, pi, ball, f);
      const bool agree =
          std::abs(fp.objective_value - bf.objective_value) <= 1e-6;
      if (f == Objective::kReward) {
        push("fixed_point_reward", fp.objective_value, bf.objective_value,
             agree);
      } else {
        push("fixed_point_cost", fp.objective_value, bf.objective_value,
             agree);
        strongest_cost = fp.objective_value;
        brute_cost = bf.objective_value;
      }
    }

    const tabular::AdversaryMdp amdp = tabular::build_adversary_mdp(
        m, pi, ball, Objective::kCost,
        tabular::default_penalty(m, Objective::kCost));
    const tabular::AdversaryMdpSolution sol =
        tabular::solve_adversary_mdp(amdp, m.mu0);
    push("adversary_mdp_cost", sol.objective_value, strongest_cost,
         std::abs(sol.objective_value - strongest_cost) <= 1e-6);

    const tabular::StateMetric metric = tabular::StateMetric::index_distance(n);
    const tabular::BoundCheck one =
        tabular::verify_one_step_bound(m, pi, ball, i % n, metric);
    push("one_step_bound", one.lhs, one.rhs, one.holds);

    // The episodic bound presumes the clean policy meets the budget, so the
    // budget is pinned slightly above the natural cost value.
    tabular::TabularCmdp feasible = m;
    const tabular::ValuePair natural =
        tabular::evaluate_policy(m, pi, tabular::TabularAdversary::identity(n));
    feasible.kappa = tabular::weighted_value(natural.v_c, m.mu0) + 0.05;
    const tabular::BoundCheck epi =
        tabular::verify_episodic_bound(feasible, pi, ball, metric);
    push("episodic_bound", epi.lhs, epi.rhs, epi.holds);

    // With the budget sitting just above the strongest cost attack, every
    // deterministic adversary must stay within it.
    const double safe_budget = strongest_cost + 1e-9;
    push("optimal_attack_safe", brute_cost, safe_budget,
         brute_cost <= safe_budget + 1e-9);

    const tabular::TabularCmdp tm =
        tabular::random_tempting_cmdp(rng, n, a, gamma);
    const tabular::TemptationResult tc = tabular::classify_temptation(tm);
    push("tempting_budget_binds", tc.constrained_v_c, tm.kappa,
         tc.status == tabular::Temptation::kTempting &&
             std::abs(tc.constrained_v_c - tm.kappa) <= 1e-9);
    push("tempting_witness", tc.witness_v_r, tc.constrained_v_r,
         tc.witness.has_value() && tc.witness_v_r > tc.constrained_v_r);

    const tabular::TabularCmdp nt =
        tabular::random_nontempting_cmdp(rng, n, a, gamma, (i % 2) == 1);
    const tabular::TemptationResult ntc = tabular::classify_temptation(nt);
    push("nontempting_within_budget", ntc.constrained_v_c, nt.kappa,
         ntc.status == tabular::Temptation::kNonTempting &&
             ntc.constrained_v_c <= nt.kappa + 1e-9);
  }
  return out;
}

void write_verify_jsonl(const std::vector<VerifyCheck>& checks,
                        std::ostream& os) {
  for (const VerifyCheck& c : checks) {
    const nlohmann::json j{{"check", c.check},
                           {"instance_id", c.instance_id},
                           {"lhs", c.lhs},
                           {"rhs", c.rhs},
                           {"holds", c.holds}};
    os << j.dump() << '\n';
  }
}

}  // namespace saferl::eval
