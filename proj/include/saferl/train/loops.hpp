#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "saferl/learn/ppol.hpp"
#include "saferl/nn/checkpoint.hpp"
#include "saferl/nn/gaussian_policy.hpp"
#include "saferl/nn/mlp.hpp"
#include "saferl/train/config.hpp"

namespace saferl::train {

// Linear ramp: 0 at epoch 0, max_eps from epoch = warmup_frac * total on.
double epsilon_schedule(int epoch, int total, double max_eps,
                        double warmup_frac);

// Stream ids for derive_seed. Each pipeline stage draws from its own
// generator so optional stages (attacks, critic fitting) cannot shift the
// randomness of shared ones, which is what makes the degenerate-config
// equivalences exact.
namespace streams {
inline constexpr std::uint64_t kPolicyInit = 1;
inline constexpr std::uint64_t kCriticInit = 2;
inline constexpr std::uint64_t kRollout = 3;
inline constexpr std::uint64_t kAttack = 4;
inline constexpr std::uint64_t kPolicyUpdate = 5;
inline constexpr std::uint64_t kValueFit = 6;
inline constexpr std::uint64_t kCriticFit = 7;
inline constexpr std::uint64_t kEvalEnv = 8;
inline constexpr std::uint64_t kEvalAttack = 9;
inline constexpr std::uint64_t kEvalCalibrate = 10;
inline constexpr std::uint64_t kEvalAction = 11;
inline constexpr std::uint64_t kEvalCalibrateAction = 12;
}  // namespace streams

struct MetricsRow {
  int epoch = 0;
  double reward_mean = 0.0;
  double cost_mean = 0.0;
  double lambda = 0.0;
  double kl = 0.0;
  double eps_current = 0.0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  nn::GaussianPolicy policy;
  nn::Mlp value_r, value_c;
  nn::Mlp q_r, q_c;
  std::vector<MetricsRow> metrics;
  learn::LagrangeState lagrange;
  int epochs_run = 0;
  // A non-finite update aborted the run; the policy is the last good state.
  bool aborted = false;
};

// Training driver for every method. With an output directory it writes
// metrics.jsonl, the resolved config.json, periodic checkpoints and a final
// one; with an empty string nothing touches the filesystem.
TrainResult train_run(const RunConfig& cfg, const std::string& out_dir = "");

// Frozen networks of a finished run, as evaluation consumes them.
struct PolicyBundle {
  nn::GaussianPolicy policy;
  nn::Mlp value_r, value_c;
  nn::Mlp q_r, q_c;
};

nn::Checkpoint make_checkpoint(const TrainResult& result,
                               const RunConfig& cfg);
PolicyBundle load_bundle(const nn::Checkpoint& ck);

}  // namespace saferl::train
