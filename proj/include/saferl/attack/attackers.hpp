#pragma once

#include <span>
#include <string>
#include <vector>

#include "saferl/nn/gaussian_policy.hpp"
#include "saferl/nn/mlp.hpp"
#include "saferl/util/rng.hpp"

namespace saferl::attack {

struct AttackConfig {
  double epsilon = 0.05;
  // Iteration budget; value-gradient attackers default to 200, the
  // divergence attacker is usually run with 60.
  int steps = 200;
  double lr = 0.05;
  double sgld_beta = 1e7;
  double early_stop_q = 1e-4;
  double early_stop_s = 1e-4;
  double amad_xi = 0.1;
  double mix_weight = 0.5;

  void validate() const;
};

// Result of corrupting one observation. corrupted always lies in the
// max-norm ball of radius epsilon around original; when a gradient turns
// non-finite the attack gives up, returns the original and sets failed.
struct Corruption {
  std::vector<double> original;
  std::vector<double> corrupted;
  int iterations = 0;
  std::vector<double> objective_trace;
  bool failed = false;
};

// State-action value oracle used by the gradient attackers. Implementations
// wrap a critic network or, in tests, a closed-form function.
struct QFunction {
  virtual ~QFunction() = default;
  virtual double value(std::span<const double> obs,
                       std::span<const double> action) const = 0;
  virtual void action_grad(std::span<const double> obs,
                           std::span<const double> action,
                           std::vector<double>& grad) const = 0;
};

// State value oracle for the high-risk gate.
struct StateValue {
  virtual ~StateValue() = default;
  virtual double value(std::span<const double> obs) const = 0;
};

// Adapts an MLP with input [obs; action] and a single output.
class MlpQAdapter : public QFunction {
 public:
  MlpQAdapter(const nn::Mlp& net, int obs_dim);
  double value(std::span<const double> obs,
               std::span<const double> action) const override;
  void action_grad(std::span<const double> obs, std::span<const double> action,
                   std::vector<double>& grad) const override;

 private:
  const nn::Mlp* net_;
  int obs_dim_;
};

class MlpValueAdapter : public StateValue {
 public:
  explicit MlpValueAdapter(const nn::Mlp& net) : net_(&net) {}
  double value(std::span<const double> obs) const override;

 private:
  const nn::Mlp* net_;
};

// Uniform draw from the max-norm ball around obs.
Corruption random_attack(std::span<const double> obs, const AttackConfig& cfg,
                         Rng& rng);

// Projected gradient ascent (descent when ascend is false) on
// q(obs, mean(s)) over s, with the q-state pinned at the clean observation.
Corruption mc_mr_attack(std::span<const double> obs,
                        const nn::GaussianPolicy& policy, const QFunction& q,
                        const AttackConfig& cfg, bool ascend = true);

// Stochastic-gradient Langevin ascent on the divergence between the action
// distributions at the clean and corrupted observations, started from a
// random point inside the ball.
Corruption mad_attack(std::span<const double> obs,
                      const nn::GaussianPolicy& policy, const AttackConfig& cfg,
                      Rng& rng);

// Gates mad_attack onto the high-value fraction of the batch: states whose
// cost value reaches the (1 - xi) percentile are attacked, the rest pass
// through unchanged.
std::vector<Corruption> amad_attack(
    const std::vector<std::vector<double>>& batch,
    const nn::GaussianPolicy& policy, const StateValue& v_c,
    const AttackConfig& cfg, Rng& rng);

// Ascent on mix_weight * q_c + (1 - mix_weight) * q_r. The endpoints
// delegate to the single-critic attack so they reproduce it exactly.
Corruption mixed_attack(std::span<const double> obs,
                        const nn::GaussianPolicy& policy, const QFunction& q_r,
                        const QFunction& q_c, const AttackConfig& cfg);

// Descent on q_r: degrades return while leaving cost incentives alone.
Corruption min_reward_attack(std::span<const double> obs,
                             const nn::GaussianPolicy& policy,
                             const QFunction& q_r, const AttackConfig& cfg);

enum class AttackKind {
  kNone,
  kRandom,
  kMad,
  kAmad,
  kMc,
  kMr,
  kMixed,
  kMinReward,
};

AttackKind attack_kind_from_string(const std::string& name);
std::string to_string(AttackKind kind);

}  // namespace saferl::attack
