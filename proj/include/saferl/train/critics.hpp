#pragma once

#include <cstddef>

#include "saferl/nn/gaussian_policy.hpp"
#include "saferl/nn/mlp.hpp"
#include "saferl/train/replay_buffer.hpp"
#include "saferl/util/rng.hpp"

namespace saferl::train {

// target <- rho * target + (1 - rho) * online, tensor by tensor. rho = 1
// freezes the target, rho = 0 copies the online net.
void polyak_update(nn::Mlp& target, const nn::Mlp& online, double rho);

// Which scalar a state-action critic regresses on.
enum class Signal { kReward, kCost };

// One SGD step on the mean-squared Bellman error of q over a uniform
// minibatch from the buffer. Targets are f + gamma * q_target(s', a') with
// a' drawn from the policy at s'; q takes [obs; action] and emits a scalar.
// Returns the minibatch loss before the step.
double critic_update(const ReplayBuffer& buffer, nn::Mlp& q,
                     const nn::Mlp& q_target, const nn::GaussianPolicy& pi,
                     Signal signal, double gamma, double lr,
                     std::size_t minibatch, Rng& rng);

}  // namespace saferl::train
