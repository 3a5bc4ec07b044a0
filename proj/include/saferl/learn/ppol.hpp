#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "saferl/learn/gae.hpp"
#include "saferl/nn/gaussian_policy.hpp"
#include "saferl/nn/mlp.hpp"
#include "saferl/util/rng.hpp"

namespace saferl::learn {

struct TrainConfig {
  double gamma = 0.995;
  double gae_lambda = 0.97;
  double clip = 0.02;
  int actor_steps = 80;
  int critic_steps = 80;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  double cost_limit = 5.0;
  double kl_delta = 0.01;
  int epochs = 100;
  int batch_steps = 40000;
  int minibatch = 300;
  std::uint64_t seed = 0;

  void validate() const;
};

// Dual variable driven by a position-form PID controller on the constraint
// error. The integral is floored at zero and lambda is kept in [0, 1e3] as
// anti-windup measures.
struct LagrangeState {
  double lambda = 0.0;
  double integral = 0.0;
  double prev_error = 0.0;
  double kp = 0.1;
  double ki = 0.003;
  double kd = 0.001;
  double lambda_max = 1e3;
};

void pid_update(LagrangeState& state, double measured_cost_return,
                double cost_limit);

struct LossResult {
  double loss = 0.0;
  // Mean of old minus new log-probabilities over the minibatch.
  double approx_kl = 0.0;
  bool finite = true;
};

// Clipped-surrogate policy loss (negated for descent) over the index subset.
// Parameter gradients are accumulated into grads; callers zero beforehand.
LossResult ppo_clip_loss(const nn::GaussianPolicy& pi, const RolloutBatch& batch,
                         std::span<const std::size_t> indices,
                         std::span<const double> reward_adv, double clip,
                         nn::PolicyGradients& grads);

// Constrained surrogate: 1/(1+lambda) times (clipped reward surrogate minus
// lambda times the unclipped ratio-weighted cost surrogate), negated for
// descent. lambda = 0 reproduces ppo_clip_loss exactly.
LossResult ppol_loss(const nn::GaussianPolicy& pi, const RolloutBatch& batch,
                     std::span<const std::size_t> indices,
                     std::span<const double> reward_adv,
                     std::span<const double> cost_adv, double clip,
                     double lambda, nn::PolicyGradients& grads);

struct UpdateDiagnostics {
  int steps_taken = 0;
  double final_kl = 0.0;
  double last_loss = 0.0;
  bool early_stopped = false;
  bool aborted = false;
};

// Extra loss term evaluated on each minibatch inside update_policy.
// Implementations accumulate their parameter gradients into grads (already
// holding the surrogate's) and return the value added to the loss.
class MinibatchPenalty {
 public:
  virtual ~MinibatchPenalty() = default;
  virtual double apply(const nn::GaussianPolicy& pi, const RolloutBatch& batch,
                       std::span<const std::size_t> indices,
                       nn::PolicyGradients& grads) = 0;
};

// Runs up to actor_steps minibatch SGD steps on ppol_loss plus the optional
// penalty. Advantages are normalized once per call. Stops early when the
// minibatch divergence estimate passes 4 * kl_delta; a non-finite loss
// restores the entry policy.
UpdateDiagnostics update_policy(nn::GaussianPolicy& pi,
                                const RolloutBatch& batch,
                                std::span<const double> reward_adv,
                                std::span<const double> cost_adv,
                                const LagrangeState& lagrange,
                                const TrainConfig& cfg, Rng& rng,
                                MinibatchPenalty* penalty = nullptr);

// Minibatch SGD regression of the net onto scalar targets; returns the last
// minibatch loss.
double fit_value_net(nn::Mlp& net, const std::vector<std::vector<double>>& obs,
                     std::span<const double> targets, double lr, int steps,
                     int minibatch, Rng& rng);

}  // namespace saferl::learn
