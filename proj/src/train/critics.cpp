#include "saferl/train/critics.hpp"

#include <vector>

#include "saferl/util/errors.hpp"

namespace saferl::train {

void polyak_update(nn::Mlp& target, const nn::Mlp& online, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw InputError("polyak: rho must lie in [0, 1]");
  }
  if (target.widths != online.widths) {
    throw SizeError("polyak: target and online widths differ");
  }
  if (rho == 1.0) return;
  if (rho == 0.0) {
    target.weights = online.weights;
    target.biases = online.biases;
    return;
  }
  const double mix = 1.0 - rho;
  for (std::size_t l = 0; l < target.weights.size(); ++l) {
    auto& tw = target.weights[l];
    const auto& ow = online.weights[l];
    for (std::size_t i = 0; i < tw.size(); ++i) {
      tw[i] = rho * tw[i] + mix * ow[i];
    }
    auto& tb = target.biases[l];
    const auto& ob = online.biases[l];
    for (std::size_t i = 0; i < tb.size(); ++i) {
      tb[i] = rho * tb[i] + mix * ob[i];
    }
  }
}

double critic_update(const ReplayBuffer& buffer, nn::Mlp& q,
                     const nn::Mlp& q_target, const nn::GaussianPolicy& pi,
                     Signal signal, double gamma, double lr,
                     std::size_t minibatch, Rng& rng) {
  if (buffer.empty()) {
    throw InputError("critic update: replay buffer is empty");
  }
  if (minibatch == 0) {
    throw InputError("critic update: minibatch must be positive");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw InputError("critic update: gamma must lie in [0, 1)");
  }
  if (q.widths != q_target.widths) {
    throw SizeError("critic update: online and target widths differ");
  }
  if (q.output_dim() != 1) {
    throw SizeError("critic update: critic must emit a single value");
  }
  if (q.input_dim() != pi.obs_dim() + pi.act_dim()) {
    throw SizeError("critic update: critic input is not [obs; action]");
  }

  const auto indices = buffer.sample_indices(minibatch, rng);
  nn::MlpGradients grads = nn::MlpGradients::like(q);
  grads.zero();

  const double inv = 1.0 / static_cast<double>(minibatch);
  double loss = 0.0;
  std::vector<double> input(q.input_dim());
  std::vector<double> out, target_out;
  nn::MlpTrace trace;
  for (const std::size_t idx : indices) {
    const Transition& tr = buffer.at(idx);
    if (tr.obs.size() + tr.action.size() !=
        static_cast<std::size_t>(q.input_dim())) {
      throw SizeError("critic update: transition does not match critic input");
    }

    const auto next_action = pi.sample(tr.next_obs, rng).action;
    std::copy(tr.next_obs.begin(), tr.next_obs.end(), input.begin());
    std::copy(next_action.begin(), next_action.end(),
              input.begin() + tr.next_obs.size());
    nn::forward(q_target, input, target_out);
    const double f = signal == Signal::kReward ? tr.reward : tr.cost;
    const double y = f + gamma * target_out[0];

    std::copy(tr.obs.begin(), tr.obs.end(), input.begin());
    std::copy(tr.action.begin(), tr.action.end(),
              input.begin() + tr.obs.size());
    nn::forward(q, input, trace, out);
    const double err = out[0] - y;
    loss += inv * err * err;

    const double d_out[1] = {2.0 * inv * err};
    nn::backward(q, trace, d_out, grads);
  }
  nn::apply_sgd(q, grads, lr);
  return loss;
}

}  // namespace saferl::train
