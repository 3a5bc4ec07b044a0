#pragma once

#include <functional>
#include <span>
#include <vector>

#include "saferl/learn/gae.hpp"
#include "saferl/learn/ppol.hpp"
#include "saferl/nn/gaussian_policy.hpp"

namespace saferl::train {

// Produces the corrupted counterpart of one observation. Implementations
// close over an adversary and whatever randomness it needs.
using ObsCorruptor =
    std::function<std::vector<double>(const std::vector<double>&)>;

// Mean divergence between the action distributions at aligned clean and
// corrupted observations. The clean branch is held constant: gradients flow
// only through the forward pass at the corrupted points. Accumulates
// beta-scaled parameter gradients into grads and returns the unweighted
// mean divergence.
double kl_robustness_regularizer(
    const nn::GaussianPolicy& pi,
    const std::vector<std::vector<double>>& clean,
    const std::vector<std::vector<double>>& corrupted, double beta,
    nn::PolicyGradients& grads);

// Plugs the regularizer into update_policy: corrupts each minibatch's
// stored observations and adds beta times the mean divergence to the loss.
class KlRobustnessPenalty : public learn::MinibatchPenalty {
 public:
  KlRobustnessPenalty(ObsCorruptor corrupt, double beta);

  double apply(const nn::GaussianPolicy& pi, const learn::RolloutBatch& batch,
               std::span<const std::size_t> indices,
               nn::PolicyGradients& grads) override;

  // Unweighted mean divergence of the last minibatch.
  double last_divergence() const { return last_divergence_; }

 private:
  ObsCorruptor corrupt_;
  double beta_ = 0.0;
  double last_divergence_ = 0.0;
};

}  // namespace saferl::train
