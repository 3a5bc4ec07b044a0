#include "saferl/train/loops.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <utility>
#include <vector>

#include "saferl/attack/attackers.hpp"
#include "saferl/envs/point_env.hpp"
#include "saferl/learn/gae.hpp"
#include "saferl/train/critics.hpp"
#include "saferl/train/kl_penalty.hpp"
#include "saferl/train/replay_buffer.hpp"
#include "saferl/util/errors.hpp"

namespace saferl::train {

using attack::AttackConfig;
using attack::AttackKind;

double epsilon_schedule(int epoch, int total, double max_eps,
                        double warmup_frac) {
  if (total <= 0 || epoch < 0 || epoch > total) {
    throw InputError("epsilon schedule: epoch must lie in [0, total]");
  }
  if (!(max_eps >= 0.0)) {
    throw InputError("epsilon schedule: max epsilon must be nonnegative");
  }
  if (!(warmup_frac >= 0.0 && warmup_frac <= 1.0)) {
    throw InputError("epsilon schedule: warmup fraction must lie in [0, 1]");
  }
  const double ramp_end = warmup_frac * total;
  if (static_cast<double>(epoch) >= ramp_end) return max_eps;
  return max_eps * (static_cast<double>(epoch) / ramp_end);
}

nlohmann::json MetricsRow::to_json() const {
  return nlohmann::json{
      {"epoch", epoch},   {"reward_mean", reward_mean},
      {"cost_mean", cost_mean}, {"lambda", lambda},
      {"kl", kl},         {"eps_current", eps_current},
  };
}

namespace {

// Applies one attacker to a single scaled observation. The critic and
// policy references are read-through: attacks always see the live networks.
class Corruptor {
 public:
  Corruptor(AttackKind kind, const AttackConfig& cfg,
            const nn::GaussianPolicy& pi, const nn::Mlp& q_r,
            const nn::Mlp& q_c, Rng& rng)
      : kind_(kind),
        cfg_(cfg),
        pi_(&pi),
        rng_(&rng),
        q_r_(q_r, pi.obs_dim()),
        q_c_(q_c, pi.obs_dim()) {}

  std::vector<double> operator()(const std::vector<double>& obs) const {
    switch (kind_) {
      case AttackKind::kNone:
        return obs;
      case AttackKind::kRandom:
        return attack::random_attack(obs, cfg_, *rng_).corrupted;
      case AttackKind::kMad:
        return attack::mad_attack(obs, *pi_, cfg_, *rng_).corrupted;
      case AttackKind::kMc:
        return attack::mc_mr_attack(obs, *pi_, q_c_, cfg_).corrupted;
      case AttackKind::kMr:
        return attack::mc_mr_attack(obs, *pi_, q_r_, cfg_).corrupted;
      default:
        throw InputError("training corruptor: unsupported attacker");
    }
  }

 private:
  AttackKind kind_;
  AttackConfig cfg_;
  const nn::GaussianPolicy* pi_;
  Rng* rng_;
  attack::MlpQAdapter q_r_;
  attack::MlpQAdapter q_c_;
};

struct RolloutOut {
  learn::RolloutBatch batch;
  std::vector<Transition> transitions;
  std::vector<std::vector<double>> bootstrap_obs;
};

RolloutOut collect_rollouts(const RunConfig& cfg, const nn::GaussianPolicy& pi,
                            const Corruptor& corrupt, Rng& env_rng) {
  const envs::EnvSpec& spec = cfg.env;
  const auto scale = envs::observation_scale(spec);
  RolloutOut out;
  std::vector<double> obs_true, next_true;
  while (out.batch.size() < static_cast<std::size_t>(cfg.train.batch_steps)) {
    out.batch.episode_starts.push_back(out.batch.size());
    envs::EnvState state = envs::reset_state(spec, env_rng);
    envs::observe(spec, state, obs_true);
    envs::scale_observation(scale, obs_true);
    std::vector<double> obs_pol = corrupt(obs_true);
    bool done = false;
    while (!done) {
      const auto samp = pi.sample(obs_pol, env_rng);
      const auto res = envs::step(spec, state, samp.action);
      envs::observe(spec, res.next, next_true);
      envs::scale_observation(scale, next_true);
      std::vector<double> next_pol = corrupt(next_true);

      Transition tr;
      tr.obs = cfg.critic_on_true_obs ? obs_true : obs_pol;
      tr.action = samp.action;
      for (double& a : tr.action) {
        a = std::clamp(a, -spec.max_force, spec.max_force);
      }
      tr.next_obs = cfg.critic_on_true_obs ? next_true : next_pol;
      tr.reward = res.reward;
      tr.cost = res.cost;
      out.transitions.push_back(std::move(tr));

      out.batch.obs.push_back(std::move(obs_pol));
      out.batch.actions.push_back(samp.action);
      out.batch.log_probs.push_back(samp.log_prob);
      out.batch.rewards.push_back(res.reward);
      out.batch.costs.push_back(res.cost);

      done = res.done;
      state = res.next;
      obs_true = next_true;
      obs_pol = std::move(next_pol);
    }
    out.bootstrap_obs.push_back(std::move(obs_pol));
  }
  return out;
}

double scalar_value(const nn::Mlp& net, std::span<const double> obs,
                    std::vector<double>& scratch) {
  nn::forward(net, obs, scratch);
  return scratch[0];
}

void fill_values(const nn::Mlp& value_r, const nn::Mlp& value_c,
                 const std::vector<std::vector<double>>& bootstrap_obs,
                 learn::RolloutBatch& batch) {
  const std::size_t n = batch.size();
  batch.reward_values.resize(n);
  batch.cost_values.resize(n);
  std::vector<double> scratch;
  for (std::size_t t = 0; t < n; ++t) {
    batch.reward_values[t] = scalar_value(value_r, batch.obs[t], scratch);
    batch.cost_values[t] = scalar_value(value_c, batch.obs[t], scratch);
  }
  batch.reward_bootstrap.resize(bootstrap_obs.size());
  batch.cost_bootstrap.resize(bootstrap_obs.size());
  for (std::size_t e = 0; e < bootstrap_obs.size(); ++e) {
    batch.reward_bootstrap[e] =
        scalar_value(value_r, bootstrap_obs[e], scratch);
    batch.cost_bootstrap[e] = scalar_value(value_c, bootstrap_obs[e], scratch);
  }
}

std::string checkpoint_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "checkpoint_%04d.json", epoch);
  return buf;
}

}  // namespace

TrainResult train_run(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const std::uint64_t seed = cfg.train.seed;
  const int obs_dim = cfg.env.obs_dim();
  const int act_dim = 2;

  Rng policy_rng(derive_seed(seed, streams::kPolicyInit));
  Rng critic_rng(derive_seed(seed, streams::kCriticInit));

  std::vector<int> v_widths{obs_dim};
  v_widths.insert(v_widths.end(), cfg.critic_hidden.begin(),
                  cfg.critic_hidden.end());
  v_widths.push_back(1);
  std::vector<int> q_widths{obs_dim + act_dim};
  q_widths.insert(q_widths.end(), cfg.critic_hidden.begin(),
                  cfg.critic_hidden.end());
  q_widths.push_back(1);

  TrainResult res;
  res.lagrange.kp = cfg.pid_kp;
  res.lagrange.ki = cfg.pid_ki;
  res.lagrange.kd = cfg.pid_kd;
  res.policy = nn::GaussianPolicy::create(obs_dim, cfg.policy_hidden, act_dim,
                                          policy_rng, cfg.policy_log_std);
  res.value_r = nn::Mlp::create(v_widths, critic_rng);
  res.value_c = nn::Mlp::create(v_widths, critic_rng);
  res.q_r = nn::Mlp::create(q_widths, critic_rng);
  res.q_c = nn::Mlp::create(q_widths, critic_rng);
  nn::Mlp q_r_target = res.q_r;
  nn::Mlp q_c_target = res.q_c;
  ReplayBuffer buffer(cfg.buffer_capacity);

  std::ofstream metrics_file;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(out_dir + "/config.json") << cfg.to_json().dump(2) << "\n";
    metrics_file.open(out_dir + "/metrics.jsonl");
  }

  const bool rollout_attack =
      cfg.method == Method::kAdvPpol && cfg.attacker != AttackKind::kNone;
  const bool sa_active = cfg.method == Method::kSaPpol && cfg.sa_beta > 0.0;

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    Rng env_rng(derive_seed(seed, streams::kRollout, epoch));
    Rng attack_rng(derive_seed(seed, streams::kAttack, epoch));
    Rng update_rng(derive_seed(seed, streams::kPolicyUpdate, epoch));
    Rng vfit_rng(derive_seed(seed, streams::kValueFit, epoch));
    Rng qfit_rng(derive_seed(seed, streams::kCriticFit, epoch));

    const double eps_now = epsilon_schedule(epoch, cfg.train.epochs,
                                            cfg.attack.epsilon,
                                            cfg.warmup_frac);
    AttackConfig acfg = cfg.attack;
    acfg.epsilon = eps_now;
    const double eps_applied = (rollout_attack || sa_active) ? eps_now : 0.0;

    const Corruptor rollout_corruptor(
        rollout_attack ? cfg.attacker : AttackKind::kNone, acfg, res.policy,
        res.q_r, res.q_c, attack_rng);
    RolloutOut ro =
        collect_rollouts(cfg, res.policy, rollout_corruptor, env_rng);
    fill_values(res.value_r, res.value_c, ro.bootstrap_obs, ro.batch);

    const auto gae_r = learn::compute_gae(
        ro.batch.rewards, ro.batch.reward_values, ro.batch.episode_starts,
        ro.batch.reward_bootstrap, cfg.train.gamma, cfg.train.gae_lambda);
    const auto gae_c = learn::compute_gae(
        ro.batch.costs, ro.batch.cost_values, ro.batch.episode_starts,
        ro.batch.cost_bootstrap, cfg.train.gamma, cfg.train.gae_lambda);

    const double reward_mean = ro.batch.mean_episode_reward();
    const double cost_mean = ro.batch.mean_episode_cost();
    learn::pid_update(res.lagrange, cost_mean, cfg.train.cost_limit);

    std::unique_ptr<KlRobustnessPenalty> penalty;
    if (sa_active) {
      const Corruptor sa_corruptor(cfg.attacker, acfg, res.policy, res.q_r,
                                   res.q_c, attack_rng);
      penalty = std::make_unique<KlRobustnessPenalty>(
          [sa_corruptor](const std::vector<double>& obs) {
            return sa_corruptor(obs);
          },
          cfg.sa_beta);
    }
    const auto diag = learn::update_policy(
        res.policy, ro.batch, gae_r.advantages, gae_c.advantages, res.lagrange,
        cfg.train, update_rng, penalty.get());
    if (diag.aborted) {
      res.aborted = true;
      break;
    }

    learn::fit_value_net(res.value_r, ro.batch.obs, gae_r.returns,
                         cfg.train.critic_lr, cfg.train.critic_steps,
                         cfg.train.minibatch, vfit_rng);
    learn::fit_value_net(res.value_c, ro.batch.obs, gae_c.returns,
                         cfg.train.critic_lr, cfg.train.critic_steps,
                         cfg.train.minibatch, vfit_rng);

    for (auto& tr : ro.transitions) buffer.push(std::move(tr));
    const auto mb = static_cast<std::size_t>(cfg.train.minibatch);
    for (int k = 0; k < cfg.train.critic_steps; ++k) {
      critic_update(buffer, res.q_r, q_r_target, res.policy, Signal::kReward,
                    cfg.train.gamma, cfg.train.critic_lr, mb, qfit_rng);
      polyak_update(q_r_target, res.q_r, cfg.polyak_rho);
      critic_update(buffer, res.q_c, q_c_target, res.policy, Signal::kCost,
                    cfg.train.gamma, cfg.train.critic_lr, mb, qfit_rng);
      polyak_update(q_c_target, res.q_c, cfg.polyak_rho);
    }

    // One-step bootstrap cannot carry an action's downstream effect across
    // the horizon within this update budget, and the attackers steer by the
    // action gradient of these nets. Anchoring them on the fresh batch's
    // empirical returns keeps that gradient pointed at what the action
    // actually changes.
    {
      std::vector<std::vector<double>> sa_rows;
      sa_rows.reserve(ro.batch.size());
      for (std::size_t i = 0; i < ro.batch.size(); ++i) {
        std::vector<double> row = ro.batch.obs[i];
        row.insert(row.end(), ro.batch.actions[i].begin(),
                   ro.batch.actions[i].end());
        sa_rows.push_back(std::move(row));
      }
      learn::fit_value_net(res.q_r, sa_rows, gae_r.returns,
                           cfg.train.critic_lr, cfg.train.critic_steps,
                           cfg.train.minibatch, qfit_rng);
      learn::fit_value_net(res.q_c, sa_rows, gae_c.returns,
                           cfg.train.critic_lr, cfg.train.critic_steps,
                           cfg.train.minibatch, qfit_rng);
    }

    MetricsRow row{epoch, reward_mean, cost_mean, res.lagrange.lambda,
                   diag.final_kl, eps_applied};
    res.metrics.push_back(row);
    res.epochs_run = epoch + 1;
    if (metrics_file.is_open()) {
      metrics_file << row.to_json().dump() << "\n" << std::flush;
    }
    if (!out_dir.empty() && (epoch + 1) % cfg.checkpoint_every == 0 &&
        epoch + 1 < cfg.train.epochs) {
      make_checkpoint(res, cfg).save(out_dir + "/" +
                                     checkpoint_name(epoch + 1));
    }
  }

  if (!out_dir.empty()) {
    make_checkpoint(res, cfg).save(out_dir + "/checkpoint_final.json");
  }
  return res;
}

nn::Checkpoint make_checkpoint(const TrainResult& result,
                               const RunConfig& cfg) {
  nn::Checkpoint ck;
  ck.put_policy("policy", result.policy);
  ck.put_mlp("value_r", result.value_r);
  ck.put_mlp("value_c", result.value_c);
  ck.put_mlp("q_r", result.q_r);
  ck.put_mlp("q_c", result.q_c);
  ck.metadata["config"] = cfg.to_json();
  ck.metadata["epochs_run"] = result.epochs_run;
  ck.metadata["lambda"] = result.lagrange.lambda;
  ck.metadata["aborted"] = result.aborted;
  return ck;
}

PolicyBundle load_bundle(const nn::Checkpoint& ck) {
  return PolicyBundle{
      .policy = ck.take_policy("policy"),
      .value_r = ck.take_mlp("value_r"),
      .value_c = ck.take_mlp("value_c"),
      .q_r = ck.take_mlp("q_r"),
      .q_c = ck.take_mlp("q_c"),
  };
}

}  // namespace saferl::train
