#include "saferl/train/kl_penalty.hpp"

#include <cmath>
#include <utility>

#include "saferl/util/errors.hpp"

namespace saferl::train {

double kl_robustness_regularizer(
    const nn::GaussianPolicy& pi, const std::vector<std::vector<double>>& clean,
    const std::vector<std::vector<double>>& corrupted, double beta,
    nn::PolicyGradients& grads) {
  if (clean.size() != corrupted.size()) {
    throw SizeError("kl regularizer: clean/corrupted batches differ in size");
  }
  if (clean.empty()) {
    throw InputError("kl regularizer: empty batch");
  }
  if (!(beta >= 0.0)) {
    throw InputError("kl regularizer: beta must be nonnegative");
  }

  const auto sigma = pi.std();
  const std::size_t act_dim = sigma.size();
  const std::size_t obs_dim = static_cast<std::size_t>(pi.obs_dim());
  const double inv = 1.0 / static_cast<double>(clean.size());

  double total = 0.0;
  std::vector<double> mu_clean, mu_cor, d_mu(act_dim);
  nn::MlpTrace trace;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (clean[i].size() != obs_dim || corrupted[i].size() != obs_dim) {
      throw SizeError("kl regularizer: observation dimension mismatch");
    }
    pi.mean(clean[i], mu_clean);
    nn::forward(pi.mean_net, corrupted[i], trace, mu_cor);
    for (std::size_t d = 0; d < act_dim; ++d) {
      const double delta = mu_cor[d] - mu_clean[d];
      const double inv_var = 1.0 / (sigma[d] * sigma[d]);
      total += inv * 0.5 * delta * delta * inv_var;
      d_mu[d] = beta * inv * delta * inv_var;
      // Negative on purpose: widening the corrupted branch lowers the
      // divergence.
      grads.d_log_std[d] += -beta * inv * delta * delta * inv_var;
    }
    nn::backward(pi.mean_net, trace, d_mu, grads.mean);
  }
  return total;
}

KlRobustnessPenalty::KlRobustnessPenalty(ObsCorruptor corrupt, double beta)
    : corrupt_(std::move(corrupt)), beta_(beta) {
  if (!corrupt_) {
    throw InputError("kl penalty: corruptor must be callable");
  }
  if (!(beta >= 0.0)) {
    throw InputError("kl penalty: beta must be nonnegative");
  }
}

double KlRobustnessPenalty::apply(const nn::GaussianPolicy& pi,
                                  const learn::RolloutBatch& batch,
                                  std::span<const std::size_t> indices,
                                  nn::PolicyGradients& grads) {
  std::vector<std::vector<double>> clean, corrupted;
  clean.reserve(indices.size());
  corrupted.reserve(indices.size());
  for (const std::size_t i : indices) {
    clean.push_back(batch.obs[i]);
    corrupted.push_back(corrupt_(batch.obs[i]));
  }
  last_divergence_ =
      kl_robustness_regularizer(pi, clean, corrupted, beta_, grads);
  return beta_ * last_divergence_;
}

}  // namespace saferl::train
