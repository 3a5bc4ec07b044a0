#include "saferl/train/config.hpp"

#include <algorithm>

#include "saferl/util/errors.hpp"

namespace saferl::train {

using attack::AttackKind;

Method method_from_string(const std::string& name) {
  if (name == "ppol") return Method::kPpol;
  if (name == "adv-ppol") return Method::kAdvPpol;
  if (name == "sa-ppol") return Method::kSaPpol;
  throw InputError("unknown training method: " + name);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kPpol:
      return "ppol";
    case Method::kAdvPpol:
      return "adv-ppol";
    case Method::kSaPpol:
      return "sa-ppol";
  }
  throw InputError("unknown training method enum value");
}

namespace {

void check_hidden(const std::vector<int>& hidden, const char* what) {
  if (hidden.empty()) {
    throw InputError(std::string(what) + ": needs at least one hidden layer");
  }
  for (const int h : hidden) {
    if (h <= 0) {
      throw InputError(std::string(what) + ": layer widths must be positive");
    }
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

// A misspelled key would otherwise fall back to the default without any
// sign that the requested override never took effect.
void reject_unknown_keys(const nlohmann::json& j, const char* what,
                         std::initializer_list<const char*> known) {
  if (!j.is_object()) return;
  for (const auto& item : j.items()) {
    const auto hit = std::find_if(
        known.begin(), known.end(),
        [&](const char* k) { return item.key() == k; });
    if (hit == known.end()) {
      throw InputError(std::string(what) + ": unknown key \"" + item.key() +
                       "\"");
    }
  }
}

}  // namespace

void RunConfig::validate() const {
  env.validate();
  train.validate();
  attack.validate();
  if (!(sa_beta >= 0.0)) {
    throw InputError("run config: sa_beta must be nonnegative");
  }
  if (!(warmup_frac >= 0.0 && warmup_frac <= 1.0)) {
    throw InputError("run config: warmup_frac must lie in [0, 1]");
  }
  if (!(polyak_rho >= 0.0 && polyak_rho <= 1.0)) {
    throw InputError("run config: polyak_rho must lie in [0, 1]");
  }
  if (buffer_capacity == 0) {
    throw InputError("run config: buffer_capacity must be positive");
  }
  if (checkpoint_every <= 0) {
    throw InputError("run config: checkpoint_every must be positive");
  }
  check_hidden(policy_hidden, "run config policy_hidden");
  check_hidden(critic_hidden, "run config critic_hidden");
  if (!(policy_log_std >= -10.0 && policy_log_std <= 3.0)) {
    throw InputError("run config: policy_log_std must lie in [-10, 3]");
  }
  if (!(pid_kp >= 0.0) || !(pid_ki >= 0.0) || !(pid_kd >= 0.0)) {
    throw InputError("run config: controller gains must be nonnegative");
  }

  switch (method) {
    case Method::kPpol:
      if (attacker != AttackKind::kNone) {
        throw InputError("run config: plain ppol takes no training attacker");
      }
      break;
    case Method::kAdvPpol:
      if (attacker != AttackKind::kNone && attacker != AttackKind::kRandom &&
          attacker != AttackKind::kMc && attacker != AttackKind::kMr) {
        throw InputError(
            "run config: adversarial training supports none, random, mc, mr");
      }
      break;
    case Method::kSaPpol:
      if (attacker != AttackKind::kMad && attacker != AttackKind::kMc &&
          attacker != AttackKind::kMr) {
        throw InputError("run config: sa-ppol adversary must be mad, mc or mr");
      }
      break;
  }
}

nlohmann::json train_config_to_json(const learn::TrainConfig& c) {
  return nlohmann::json{
      {"gamma", c.gamma},           {"gae_lambda", c.gae_lambda},
      {"clip", c.clip},             {"actor_steps", c.actor_steps},
      {"critic_steps", c.critic_steps}, {"actor_lr", c.actor_lr},
      {"critic_lr", c.critic_lr},   {"cost_limit", c.cost_limit},
      {"kl_delta", c.kl_delta},     {"epochs", c.epochs},
      {"batch_steps", c.batch_steps}, {"minibatch", c.minibatch},
      {"seed", c.seed},
  };
}

learn::TrainConfig train_config_from_json(const nlohmann::json& j) {
  learn::TrainConfig c;
  reject_unknown_keys(j, "train config",
                      {"gamma", "gae_lambda", "clip", "actor_steps",
                       "critic_steps", "actor_lr", "critic_lr", "cost_limit",
                       "kl_delta", "epochs", "batch_steps", "minibatch",
                       "seed"});
  read(j, "gamma", c.gamma);
  read(j, "gae_lambda", c.gae_lambda);
  read(j, "clip", c.clip);
  read(j, "actor_steps", c.actor_steps);
  read(j, "critic_steps", c.critic_steps);
  read(j, "actor_lr", c.actor_lr);
  read(j, "critic_lr", c.critic_lr);
  read(j, "cost_limit", c.cost_limit);
  read(j, "kl_delta", c.kl_delta);
  read(j, "epochs", c.epochs);
  read(j, "batch_steps", c.batch_steps);
  read(j, "minibatch", c.minibatch);
  read(j, "seed", c.seed);
  return c;
}

nlohmann::json attack_config_to_json(const attack::AttackConfig& c) {
  return nlohmann::json{
      {"epsilon", c.epsilon},
      {"steps", c.steps},
      {"lr", c.lr},
      {"sgld_beta", c.sgld_beta},
      {"early_stop_q", c.early_stop_q},
      {"early_stop_s", c.early_stop_s},
      {"amad_xi", c.amad_xi},
      {"mix_weight", c.mix_weight},
  };
}

attack::AttackConfig attack_config_from_json(const nlohmann::json& j,
                                             AttackKind kind) {
  attack::AttackConfig c;
  reject_unknown_keys(j, "attack config",
                      {"epsilon", "steps", "lr", "sgld_beta", "early_stop_q",
                       "early_stop_s", "amad_xi", "mix_weight"});
  if (!j.contains("steps") &&
      (kind == AttackKind::kMad || kind == AttackKind::kAmad)) {
    c.steps = 60;
  }
  read(j, "epsilon", c.epsilon);
  read(j, "steps", c.steps);
  read(j, "lr", c.lr);
  read(j, "sgld_beta", c.sgld_beta);
  read(j, "early_stop_q", c.early_stop_q);
  read(j, "early_stop_s", c.early_stop_s);
  read(j, "amad_xi", c.amad_xi);
  read(j, "mix_weight", c.mix_weight);
  return c;
}

nlohmann::json RunConfig::to_json() const {
  return nlohmann::json{
      {"env", env.to_json()},
      {"method", train::to_string(method)},
      {"attacker", attack::to_string(attacker)},
      {"sa_beta", sa_beta},
      {"train", train_config_to_json(train)},
      {"attack", attack_config_to_json(attack)},
      {"warmup_frac", warmup_frac},
      {"polyak_rho", polyak_rho},
      {"buffer_capacity", buffer_capacity},
      {"critic_on_true_obs", critic_on_true_obs},
      {"checkpoint_every", checkpoint_every},
      {"policy_hidden", policy_hidden},
      {"critic_hidden", critic_hidden},
      {"policy_log_std", policy_log_std},
      {"pid_kp", pid_kp},
      {"pid_ki", pid_ki},
      {"pid_kd", pid_kd},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  reject_unknown_keys(
      j, "run config",
      {"env", "method", "attacker", "sa_beta", "train", "attack",
       "warmup_frac", "polyak_rho", "buffer_capacity", "critic_on_true_obs",
       "checkpoint_every", "policy_hidden", "critic_hidden", "policy_log_std",
       "pid_kp", "pid_ki", "pid_kd"});
  if (j.contains("env")) c.env = envs::EnvSpec::from_json(j.at("env"));
  if (j.contains("method")) {
    c.method = method_from_string(j.at("method").get<std::string>());
  }
  if (j.contains("attacker")) {
    c.attacker =
        attack::attack_kind_from_string(j.at("attacker").get<std::string>());
  } else if (c.method == Method::kSaPpol) {
    c.attacker = AttackKind::kMad;
  }
  read(j, "sa_beta", c.sa_beta);
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  c.attack = attack_config_from_json(
      j.contains("attack") ? j.at("attack") : nlohmann::json::object(),
      c.attacker);
  read(j, "warmup_frac", c.warmup_frac);
  read(j, "polyak_rho", c.polyak_rho);
  read(j, "buffer_capacity", c.buffer_capacity);
  read(j, "critic_on_true_obs", c.critic_on_true_obs);
  read(j, "checkpoint_every", c.checkpoint_every);
  read(j, "policy_hidden", c.policy_hidden);
  read(j, "critic_hidden", c.critic_hidden);
  read(j, "policy_log_std", c.policy_log_std);
  read(j, "pid_kp", c.pid_kp);
  read(j, "pid_ki", c.pid_ki);
  read(j, "pid_kd", c.pid_kd);
  c.validate();
  return c;
}

}  // namespace saferl::train
