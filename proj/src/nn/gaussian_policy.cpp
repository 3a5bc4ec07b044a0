#include "saferl/nn/gaussian_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "saferl/util/errors.hpp"

namespace saferl::nn {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // log(2*pi)/2
}

GaussianPolicy GaussianPolicy::create(int obs_dim,
                                      const std::vector<int>& hidden,
                                      int act_dim, Rng& rng,
                                      double log_std_init) {
  std::vector<int> widths{obs_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(act_dim);
  GaussianPolicy pi;
  pi.mean_net = Mlp::create(widths, rng, 0.01);
  pi.log_std.assign(act_dim, log_std_init);
  return pi;
}

void GaussianPolicy::mean(std::span<const double> obs,
                          std::vector<double>& out) const {
  forward(mean_net, obs, out);
}

std::vector<double> GaussianPolicy::std() const {
  std::vector<double> out(log_std.size());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = std::exp(log_std[d]);
  return out;
}

double GaussianPolicy::log_prob(std::span<const double> obs,
                                std::span<const double> action) const {
  if (action.size() != static_cast<std::size_t>(act_dim())) {
    throw InputError("log_prob: action width mismatch");
  }
  std::vector<double> mu;
  mean(obs, mu);
  double acc = 0.0;
  for (std::size_t d = 0; d < action.size(); ++d) {
    const double sigma = std::exp(log_std[d]);
    const double z = (action[d] - mu[d]) / sigma;
    acc += -0.5 * z * z - log_std[d] - kHalfLog2Pi;
  }
  return acc;
}

GaussianPolicy::Sample GaussianPolicy::sample(std::span<const double> obs,
                                              Rng& rng) const {
  Sample out;
  std::vector<double> mu;
  mean(obs, mu);
  out.action.resize(mu.size());
  double logp = 0.0;
  for (std::size_t d = 0; d < mu.size(); ++d) {
    const double z = rng.normal();
    const double sigma = std::exp(log_std[d]);
    out.action[d] = mu[d] + sigma * z;
    logp += -0.5 * z * z - log_std[d] - kHalfLog2Pi;
  }
  out.log_prob = logp;
  return out;
}

void GaussianPolicy::clamp_log_std(double lo, double hi) {
  for (double& v : log_std) v = std::clamp(v, lo, hi);
}

double gaussian_kl(std::span<const double> p_mean,
                   std::span<const double> p_std,
                   std::span<const double> q_mean,
                   std::span<const double> q_std) {
  if (p_mean.size() != p_std.size() || q_mean.size() != q_std.size() ||
      p_mean.size() != q_mean.size()) {
    throw InputError("gaussian_kl: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t d = 0; d < p_mean.size(); ++d) {
    if (!(p_std[d] > 0.0) || !(q_std[d] > 0.0)) {
      throw InputError("gaussian_kl: standard deviations must be positive");
    }
    const double ratio = p_std[d] / q_std[d];
    const double dm = (p_mean[d] - q_mean[d]) / q_std[d];
    acc += std::log(q_std[d] / p_std[d]) + 0.5 * (ratio * ratio + dm * dm) -
           0.5;
  }
  return acc;
}

PolicyGradients PolicyGradients::like(const GaussianPolicy& pi) {
  PolicyGradients g;
  g.mean = MlpGradients::like(pi.mean_net);
  g.d_log_std.assign(pi.log_std.size(), 0.0);
  return g;
}

void PolicyGradients::zero() {
  mean.zero();
  std::fill(d_log_std.begin(), d_log_std.end(), 0.0);
}

void log_prob_backward(const GaussianPolicy& pi, const MlpTrace& mean_trace,
                       std::span<const double> action, double coeff,
                       PolicyGradients& grads) {
  const std::size_t act_dim = pi.log_std.size();
  const auto& mu = mean_trace.act.back();
  std::vector<double> d_mu(act_dim);
  for (std::size_t d = 0; d < act_dim; ++d) {
    const double sigma = std::exp(pi.log_std[d]);
    const double z = (action[d] - mu[d]) / sigma;
    // d logp / d mu = z / sigma; d logp / d log_std = z^2 - 1.
    d_mu[d] = coeff * z / sigma;
    grads.d_log_std[d] += coeff * (z * z - 1.0);
  }
  backward(pi.mean_net, mean_trace, d_mu, grads.mean);
}

void apply_sgd(GaussianPolicy& pi, const PolicyGradients& grads, double lr) {
  apply_sgd(pi.mean_net, grads.mean, lr);
  for (std::size_t d = 0; d < pi.log_std.size(); ++d) {
    pi.log_std[d] -= lr * grads.d_log_std[d];
  }
}

}  // namespace saferl::nn
