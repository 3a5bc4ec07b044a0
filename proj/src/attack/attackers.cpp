#include "saferl/attack/attackers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "saferl/util/errors.hpp"

namespace saferl::attack {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void project_ball(std::span<const double> center, double eps,
                  std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::clamp(v[i], center[i] - eps, center[i] + eps);
  }
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

Corruption identity_corruption(std::span<const double> obs) {
  Corruption out;
  out.original.assign(obs.begin(), obs.end());
  out.corrupted = out.original;
  return out;
}

Corruption failed_corruption(std::span<const double> obs) {
  Corruption out = identity_corruption(obs);
  out.failed = true;
  return out;
}

// Combines two critics with a fixed weight on the cost head.
class WeightedQ : public QFunction {
 public:
  WeightedQ(const QFunction& q_r, const QFunction& q_c, double w)
      : q_r_(&q_r), q_c_(&q_c), w_(w) {}

  double value(std::span<const double> obs,
               std::span<const double> action) const override {
    return w_ * q_c_->value(obs, action) +
           (1.0 - w_) * q_r_->value(obs, action);
  }

  void action_grad(std::span<const double> obs, std::span<const double> action,
                   std::vector<double>& grad) const override {
    std::vector<double> gr;
    q_c_->action_grad(obs, action, grad);
    q_r_->action_grad(obs, action, gr);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      grad[i] = w_ * grad[i] + (1.0 - w_) * gr[i];
    }
  }

 private:
  const QFunction* q_r_;
  const QFunction* q_c_;
  double w_;
};

}  // namespace

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InputError("attack config: epsilon must be finite and nonnegative");
  }
  if (steps < 1) throw InputError("attack config: steps must be at least 1");
  if (!(lr > 0.0)) throw InputError("attack config: lr must be positive");
  if (!(sgld_beta > 0.0)) {
    throw InputError("attack config: sgld_beta must be positive");
  }
  if (early_stop_q < 0.0 || early_stop_s < 0.0) {
    throw InputError("attack config: early-stop thresholds must be >= 0");
  }
  if (!(amad_xi >= 0.0 && amad_xi <= 1.0)) {
    throw InputError("attack config: amad_xi must lie in [0, 1]");
  }
  if (!(mix_weight >= 0.0 && mix_weight <= 1.0)) {
    throw InputError("attack config: mix_weight must lie in [0, 1]");
  }
}

MlpQAdapter::MlpQAdapter(const nn::Mlp& net, int obs_dim)
    : net_(&net), obs_dim_(obs_dim) {
  if (net.output_dim() != 1) {
    throw InputError("q adapter: critic must have one output");
  }
  if (net.input_dim() <= obs_dim || obs_dim <= 0) {
    throw InputError("q adapter: input must concatenate obs and action");
  }
}

double MlpQAdapter::value(std::span<const double> obs,
                          std::span<const double> action) const {
  std::vector<double> input(obs.begin(), obs.end());
  input.insert(input.end(), action.begin(), action.end());
  std::vector<double> out;
  nn::forward(*net_, input, out);
  return out[0];
}

void MlpQAdapter::action_grad(std::span<const double> obs,
                              std::span<const double> action,
                              std::vector<double>& grad) const {
  std::vector<double> input(obs.begin(), obs.end());
  input.insert(input.end(), action.begin(), action.end());
  nn::MlpTrace trace;
  std::vector<double> out;
  nn::forward(*net_, input, trace, out);
  nn::MlpGradients grads = nn::MlpGradients::like(*net_);
  const std::vector<double> seed = {1.0};
  nn::backward(*net_, trace, seed, grads);
  grad.assign(grads.d_input.begin() + obs_dim_, grads.d_input.end());
}

double MlpValueAdapter::value(std::span<const double> obs) const {
  std::vector<double> out;
  nn::forward(*net_, obs, out);
  return out[0];
}

Corruption random_attack(std::span<const double> obs, const AttackConfig& cfg,
                         Rng& rng) {
  cfg.validate();
  Corruption out = identity_corruption(obs);
  if (cfg.epsilon == 0.0) return out;
  for (std::size_t i = 0; i < out.corrupted.size(); ++i) {
    out.corrupted[i] = obs[i] + rng.uniform(-cfg.epsilon, cfg.epsilon);
  }
  project_ball(obs, cfg.epsilon, out.corrupted);
  return out;
}

Corruption mc_mr_attack(std::span<const double> obs,
                        const nn::GaussianPolicy& policy, const QFunction& q,
                        const AttackConfig& cfg, bool ascend) {
  cfg.validate();
  if (static_cast<int>(obs.size()) != policy.obs_dim()) {
    throw InputError("attack: observation width does not match the policy");
  }
  Corruption out = identity_corruption(obs);
  if (cfg.epsilon == 0.0) return out;

  const double sign = ascend ? 1.0 : -1.0;
  std::vector<double> cur = out.original;
  nn::MlpTrace trace;
  nn::MlpGradients grads = nn::MlpGradients::like(policy.mean_net);
  std::vector<double> action, d_action, next;

  nn::forward(policy.mean_net, cur, trace, action);
  double prev = q.value(obs, action);
  if (!std::isfinite(prev)) return failed_corruption(obs);
  out.objective_trace.push_back(prev);

  for (int k = 0; k < cfg.steps; ++k) {
    q.action_grad(obs, action, d_action);
    if (!all_finite(d_action)) return failed_corruption(obs);
    nn::backward(policy.mean_net, trace, d_action, grads);
    if (!all_finite(grads.d_input)) return failed_corruption(obs);

    next = cur;
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] += sign * cfg.lr * grads.d_input[i];
    }
    project_ball(obs, cfg.epsilon, next);
    const double delta_s = max_abs_diff(next, cur);

    nn::forward(policy.mean_net, next, trace, action);
    const double val = q.value(obs, action);
    if (!std::isfinite(val)) return failed_corruption(obs);
    out.objective_trace.push_back(val);
    out.iterations = k + 1;

    const double delta_q = std::abs(val - prev);
    cur = next;
    prev = val;
    if (delta_q < cfg.early_stop_q && delta_s < cfg.early_stop_s) break;
  }
  out.corrupted = cur;
  return out;
}

Corruption mad_attack(std::span<const double> obs,
                      const nn::GaussianPolicy& policy, const AttackConfig& cfg,
                      Rng& rng) {
  cfg.validate();
  if (static_cast<int>(obs.size()) != policy.obs_dim()) {
    throw InputError("attack: observation width does not match the policy");
  }
  Corruption out = identity_corruption(obs);
  if (cfg.epsilon == 0.0) return out;

  const std::vector<double> sigma = policy.std();
  std::vector<double> mu0;
  policy.mean(obs, mu0);

  // A random start inside the ball; the divergence objective is flat at the
  // clean observation, so starting there would stall a noiseless run.
  std::vector<double> cur(out.original.size());
  for (std::size_t i = 0; i < cur.size(); ++i) {
    cur[i] = obs[i] + rng.uniform(-cfg.epsilon, cfg.epsilon);
  }
  project_ball(obs, cfg.epsilon, cur);

  const double noise_scale = std::sqrt(2.0 / (cfg.sgld_beta * cfg.lr));
  nn::MlpTrace trace;
  nn::MlpGradients grads = nn::MlpGradients::like(policy.mean_net);
  std::vector<double> mu, d_mu(mu0.size()), next;

  nn::forward(policy.mean_net, cur, trace, mu);
  double prev = nn::gaussian_kl(mu0, sigma, mu, sigma);
  if (!std::isfinite(prev)) return failed_corruption(obs);
  out.objective_trace.push_back(prev);

  for (int k = 0; k < cfg.steps; ++k) {
    for (std::size_t d = 0; d < mu.size(); ++d) {
      d_mu[d] = (mu[d] - mu0[d]) / (sigma[d] * sigma[d]);
    }
    nn::backward(policy.mean_net, trace, d_mu, grads);
    if (!all_finite(grads.d_input)) return failed_corruption(obs);

    next = cur;
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] += cfg.lr * (grads.d_input[i] + noise_scale * rng.normal());
    }
    project_ball(obs, cfg.epsilon, next);
    const double delta_s = max_abs_diff(next, cur);

    nn::forward(policy.mean_net, next, trace, mu);
    const double val = nn::gaussian_kl(mu0, sigma, mu, sigma);
    if (!std::isfinite(val)) return failed_corruption(obs);
    out.objective_trace.push_back(val);
    out.iterations = k + 1;

    const double delta_kl = std::abs(val - prev);
    cur = next;
    prev = val;
    if (delta_kl < cfg.early_stop_q && delta_s < cfg.early_stop_s) break;
  }
  out.corrupted = cur;
  return out;
}

std::vector<Corruption> amad_attack(
    const std::vector<std::vector<double>>& batch,
    const nn::GaussianPolicy& policy, const StateValue& v_c,
    const AttackConfig& cfg, Rng& rng) {
  cfg.validate();
  if (batch.empty()) throw InputError("amad: batch must be nonempty");

  const std::size_t n = batch.size();
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = v_c.value(batch[i]);

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const auto idx = static_cast<std::size_t>(
      std::floor((1.0 - cfg.amad_xi) * static_cast<double>(n) + 1e-9));
  const double threshold = idx >= n
                               ? std::numeric_limits<double>::infinity()
                               : sorted[idx];

  // Seeds are drawn for every slot so one state's gate cannot shift another
  // state's stream.
  std::vector<std::uint64_t> seeds(n);
  for (std::size_t i = 0; i < n; ++i) seeds[i] = rng.next_u64();

  std::vector<Corruption> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i] >= threshold) {
      Rng local(seeds[i]);
      out[i] = mad_attack(batch[i], policy, cfg, local);
    } else {
      out[i] = identity_corruption(batch[i]);
    }
  }
  return out;
}

Corruption mixed_attack(std::span<const double> obs,
                        const nn::GaussianPolicy& policy, const QFunction& q_r,
                        const QFunction& q_c, const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.mix_weight == 1.0) return mc_mr_attack(obs, policy, q_c, cfg, true);
  if (cfg.mix_weight == 0.0) return mc_mr_attack(obs, policy, q_r, cfg, true);
  const WeightedQ mixed(q_r, q_c, cfg.mix_weight);
  return mc_mr_attack(obs, policy, mixed, cfg, true);
}

Corruption min_reward_attack(std::span<const double> obs,
                             const nn::GaussianPolicy& policy,
                             const QFunction& q_r, const AttackConfig& cfg) {
  return mc_mr_attack(obs, policy, q_r, cfg, false);
}

AttackKind attack_kind_from_string(const std::string& name) {
  if (name == "none") return AttackKind::kNone;
  if (name == "random") return AttackKind::kRandom;
  if (name == "mad") return AttackKind::kMad;
  if (name == "amad") return AttackKind::kAmad;
  if (name == "mc") return AttackKind::kMc;
  if (name == "mr") return AttackKind::kMr;
  if (name == "mixed") return AttackKind::kMixed;
  if (name == "min_reward") return AttackKind::kMinReward;
  throw InputError("unknown attacker: " + name);
}

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone: return "none";
    case AttackKind::kRandom: return "random";
    case AttackKind::kMad: return "mad";
    case AttackKind::kAmad: return "amad";
    case AttackKind::kMc: return "mc";
    case AttackKind::kMr: return "mr";
    case AttackKind::kMixed: return "mixed";
    case AttackKind::kMinReward: return "min_reward";
  }
  throw InputError("unknown attacker kind");
}

}  // namespace saferl::attack
