#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "saferl/attack/attackers.hpp"
#include "saferl/envs/point_env.hpp"
#include "saferl/learn/ppol.hpp"

namespace saferl::train {

enum class Method { kPpol, kAdvPpol, kSaPpol };

Method method_from_string(const std::string& name);
std::string to_string(Method m);

// Everything one training run needs. Round-trips through JSON so the
// resolved copy written next to the outputs reproduces the run.
struct RunConfig {
  envs::EnvSpec env;
  learn::TrainConfig train;
  attack::AttackConfig attack;
  Method method = Method::kPpol;
  attack::AttackKind attacker = attack::AttackKind::kNone;
  double sa_beta = 1.0;
  double warmup_frac = 0.5;
  double polyak_rho = 0.995;
  std::size_t buffer_capacity = 100000;
  // Replay transitions carry the observations the policy acted on by
  // default; switching this on stores the uncorrupted ones instead.
  bool critic_on_true_obs = false;
  int checkpoint_every = 10;
  std::vector<int> policy_hidden = {64, 64};
  std::vector<int> critic_hidden = {64, 64};
  // Initial exploration scale, as log standard deviation of the Gaussian
  // policy. The noise alone decides how unsafe the untrained policy is, so
  // short runs start quieter to spend their epochs on the objective rather
  // than on suppressing noise-driven violations.
  double policy_log_std = -0.5;
  // Dual-controller gains. The integral gain sets how long the multiplier
  // remembers past violations; short runs want it small so the multiplier
  // relaxes quickly once the policy is safe.
  double pid_kp = 0.1;
  double pid_ki = 0.003;
  double pid_kd = 0.001;

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

// Sub-object serializers, also used by the evaluation configs. Absent keys
// keep their defaults; the attack parser defaults the iteration budget to
// 60 for the divergence attackers and 200 otherwise when "steps" is absent.
nlohmann::json train_config_to_json(const learn::TrainConfig& c);
learn::TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json attack_config_to_json(const attack::AttackConfig& c);
attack::AttackConfig attack_config_from_json(const nlohmann::json& j,
                                             attack::AttackKind kind);

}  // namespace saferl::train
