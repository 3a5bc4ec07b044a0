#pragma once

#include <span>
#include <vector>

#include "saferl/nn/mlp.hpp"
#include "saferl/util/rng.hpp"

namespace saferl::nn {

// Diagonal Gaussian policy: state-dependent mean from an MLP, global
// learnable per-dimension log standard deviations.
struct GaussianPolicy {
  Mlp mean_net;
  std::vector<double> log_std;

  int obs_dim() const { return mean_net.input_dim(); }
  int act_dim() const { return mean_net.output_dim(); }

  static GaussianPolicy create(int obs_dim, const std::vector<int>& hidden,
                               int act_dim, Rng& rng,
                               double log_std_init = -0.5);

  void mean(std::span<const double> obs, std::vector<double>& out) const;
  std::vector<double> std() const;

  double log_prob(std::span<const double> obs,
                  std::span<const double> action) const;

  struct Sample {
    std::vector<double> action;
    double log_prob = 0.0;
  };
  // Reparameterized draw mean + std * z.
  Sample sample(std::span<const double> obs, Rng& rng) const;

  void clamp_log_std(double lo = -5.0, double hi = 2.0);
};

// Closed-form KL divergence between diagonal Gaussians, D_KL(p || q).
double gaussian_kl(std::span<const double> p_mean,
                   std::span<const double> p_std,
                   std::span<const double> q_mean,
                   std::span<const double> q_std);

// Gradient buffers for the policy parameters.
struct PolicyGradients {
  MlpGradients mean;
  std::vector<double> d_log_std;

  static PolicyGradients like(const GaussianPolicy& pi);
  void zero();
};

// Accumulates d(logp)/d(theta) scaled by coeff into grads, given the trace
// of the mean forward pass at obs. Returns nothing; the input gradient of
// the mean net is left in grads.mean.d_input (scaled contribution of this
// sample only).
void log_prob_backward(const GaussianPolicy& pi, const MlpTrace& mean_trace,
                       std::span<const double> action, double coeff,
                       PolicyGradients& grads);

void apply_sgd(GaussianPolicy& pi, const PolicyGradients& grads, double lr);

}  // namespace saferl::nn
