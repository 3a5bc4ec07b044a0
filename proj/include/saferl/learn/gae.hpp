#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace saferl::learn {

// One on-policy collection phase. Observations are whatever the policy saw
// when acting, which under an adversary means the corrupted ones. Episodes
// are contiguous slices delimited by episode_starts; each episode carries a
// bootstrap value for its truncation state.
struct RolloutBatch {
  std::vector<std::vector<double>> obs;
  std::vector<std::vector<double>> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> costs;
  std::vector<double> reward_values;
  std::vector<double> cost_values;
  std::vector<std::size_t> episode_starts;
  std::vector<double> reward_bootstrap;
  std::vector<double> cost_bootstrap;

  std::size_t size() const { return rewards.size(); }
  std::size_t episode_count() const { return episode_starts.size(); }
  void validate() const;

  double mean_episode_reward() const;
  double mean_episode_cost() const;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Generalized advantage estimation over the batch's episodes, bootstrapped
// with the per-episode tail value.
GaeResult compute_gae(std::span<const double> signal,
                      std::span<const double> values,
                      std::span<const std::size_t> episode_starts,
                      std::span<const double> bootstrap, double gamma,
                      double gae_lambda);

// In-place shift to mean zero and scale to unit standard deviation; when the
// spread is degenerate (< 1e-8) only the shift is applied.
void normalize_advantages(std::vector<double>& advantages);

}  // namespace saferl::learn
