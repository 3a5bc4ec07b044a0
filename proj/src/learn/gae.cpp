#include "saferl/learn/gae.hpp"

#include <cmath>

#include "saferl/util/errors.hpp"

namespace saferl::learn {

void RolloutBatch::validate() const {
  const std::size_t n = rewards.size();
  if (n == 0) throw InputError("rollout batch: empty");
  if (obs.size() != n || actions.size() != n || log_probs.size() != n ||
      costs.size() != n || reward_values.size() != n ||
      cost_values.size() != n) {
    throw SizeError("rollout batch: field lengths disagree");
  }
  if (episode_starts.empty() || episode_starts.front() != 0) {
    throw InputError("rollout batch: episodes must start at index zero");
  }
  for (std::size_t e = 1; e < episode_starts.size(); ++e) {
    if (episode_starts[e] <= episode_starts[e - 1] || episode_starts[e] >= n) {
      throw InputError("rollout batch: episode starts must increase within range");
    }
  }
  if (reward_bootstrap.size() != episode_starts.size() ||
      cost_bootstrap.size() != episode_starts.size()) {
    throw SizeError("rollout batch: one bootstrap value per episode required");
  }
  for (double lp : log_probs) {
    if (!std::isfinite(lp)) {
      throw InputError("rollout batch: non-finite stored log-probability");
    }
  }
}

double RolloutBatch::mean_episode_reward() const {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total / static_cast<double>(episode_count());
}

double RolloutBatch::mean_episode_cost() const {
  double total = 0.0;
  for (double c : costs) total += c;
  return total / static_cast<double>(episode_count());
}

GaeResult compute_gae(std::span<const double> signal,
                      std::span<const double> values,
                      std::span<const std::size_t> episode_starts,
                      std::span<const double> bootstrap, double gamma,
                      double gae_lambda) {
  const std::size_t n = signal.size();
  if (values.size() != n) {
    throw SizeError("gae: signal and value lengths disagree");
  }
  if (n == 0) throw InputError("gae: empty batch");
  if (episode_starts.empty() || episode_starts.front() != 0) {
    throw InputError("gae: episodes must start at index zero");
  }
  if (bootstrap.size() != episode_starts.size()) {
    throw SizeError("gae: one bootstrap value per episode required");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("gae: gamma not in [0,1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw InputError("gae: lambda not in [0,1]");
  }

  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  const std::size_t episodes = episode_starts.size();
  for (std::size_t e = 0; e < episodes; ++e) {
    const std::size_t start = episode_starts[e];
    const std::size_t end = e + 1 < episodes ? episode_starts[e + 1] : n;
    if (end <= start) throw InputError("gae: empty episode slice");
    double next_adv = 0.0;
    double next_value = bootstrap[e];
    for (std::size_t t = end; t-- > start;) {
      const double delta = signal[t] + gamma * next_value - values[t];
      const double adv = delta + gamma * gae_lambda * next_adv;
      out.advantages[t] = adv;
      out.returns[t] = adv + values[t];
      next_adv = adv;
      next_value = values[t];
    }
  }
  return out;
}

void normalize_advantages(std::vector<double>& advantages) {
  if (advantages.empty()) throw InputError("normalize: empty advantages");
  const double n = static_cast<double>(advantages.size());
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var / n);
  if (stddev < 1e-8) {
    for (double& a : advantages) a -= mean;
    return;
  }
  for (double& a : advantages) a = (a - mean) / stddev;
}

}  // namespace saferl::learn
