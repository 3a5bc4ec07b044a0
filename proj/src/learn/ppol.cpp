#include "saferl/learn/ppol.hpp"

#include <algorithm>
#include <cmath>

#include "saferl/util/errors.hpp"

namespace saferl::learn {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;

// Shuffled index passes; minibatches covering the whole set are served in
// natural order without consuming the rng.
class MinibatchPlan {
 public:
  MinibatchPlan(std::size_t n, std::size_t minibatch, Rng& rng)
      : rng_(&rng), size_(std::min(minibatch, n)), full_(minibatch >= n) {
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    pos_ = n;
  }

  std::span<const std::size_t> next() {
    if (full_) return order_;
    if (pos_ + size_ > order_.size()) {
      for (std::size_t i = order_.size(); i-- > 1;) {
        const std::size_t j = static_cast<std::size_t>(
            rng_->uniform_int(0, static_cast<long long>(i)));
        std::swap(order_[i], order_[j]);
      }
      pos_ = 0;
    }
    const std::span<const std::size_t> out(order_.data() + pos_, size_);
    pos_ += size_;
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  Rng* rng_;
  std::size_t size_;
  bool full_;
};

LossResult surrogate_loss(const nn::GaussianPolicy& pi,
                          const RolloutBatch& batch,
                          std::span<const std::size_t> indices,
                          std::span<const double> reward_adv,
                          std::span<const double> cost_adv, double clip,
                          double lambda, nn::PolicyGradients& grads) {
  if (indices.empty()) throw InputError("policy loss: empty minibatch");
  if (reward_adv.size() != batch.size()) {
    throw SizeError("policy loss: reward advantages misaligned");
  }
  if (!cost_adv.empty() && cost_adv.size() != batch.size()) {
    throw SizeError("policy loss: cost advantages misaligned");
  }
  if (!(clip > 0.0)) throw InputError("policy loss: clip must be positive");
  if (lambda < 0.0) throw InputError("policy loss: lambda must be >= 0");

  const double count = static_cast<double>(indices.size());
  const double inv = 1.0 / (1.0 + lambda);
  const std::vector<double> sigma = pi.std();

  LossResult res;
  double loss_acc = 0.0;
  double kl_acc = 0.0;
  nn::MlpTrace trace;
  std::vector<double> mu;
  for (const std::size_t idx : indices) {
    nn::forward(pi.mean_net, batch.obs[idx], trace, mu);
    double logp = 0.0;
    for (std::size_t d = 0; d < mu.size(); ++d) {
      const double z = (batch.actions[idx][d] - mu[d]) / sigma[d];
      logp += -0.5 * z * z - pi.log_std[d] - kHalfLog2Pi;
    }
    const double ratio = std::exp(logp - batch.log_probs[idx]);
    if (!std::isfinite(ratio)) {
      res.finite = false;
      return res;
    }

    const double a = reward_adv[idx];
    const double unclipped = ratio * a;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * a;
    const double surr = std::min(unclipped, clipped);
    const double surr_dlogp = unclipped <= clipped ? unclipped : 0.0;

    double cost_surr = 0.0;
    if (lambda != 0.0 && !cost_adv.empty()) {
      cost_surr = ratio * cost_adv[idx];
    }

    loss_acc += -(inv * (surr - lambda * cost_surr));
    kl_acc += batch.log_probs[idx] - logp;

    const double coeff = -(inv * (surr_dlogp - lambda * cost_surr)) / count;
    nn::log_prob_backward(pi, trace, batch.actions[idx], coeff, grads);
  }
  res.loss = loss_acc / count;
  res.approx_kl = kl_acc / count;
  if (!std::isfinite(res.loss)) res.finite = false;
  return res;
}

bool grads_finite(const nn::PolicyGradients& grads) {
  for (const auto& layer : grads.mean.d_weights) {
    for (double g : layer) {
      if (!std::isfinite(g)) return false;
    }
  }
  for (const auto& layer : grads.mean.d_biases) {
    for (double g : layer) {
      if (!std::isfinite(g)) return false;
    }
  }
  for (double g : grads.d_log_std) {
    if (!std::isfinite(g)) return false;
  }
  return true;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw InputError("train config: gamma must lie in [0, 1)");
  }
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw InputError("train config: gae_lambda must lie in [0, 1]");
  }
  if (!(clip > 0.0)) throw InputError("train config: clip must be positive");
  if (actor_steps < 1 || critic_steps < 1) {
    throw InputError("train config: optimization step counts must be >= 1");
  }
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) {
    throw InputError("train config: learning rates must be positive");
  }
  if (cost_limit < 0.0) {
    throw InputError("train config: cost limit must be >= 0");
  }
  if (!(kl_delta > 0.0)) {
    throw InputError("train config: kl_delta must be positive");
  }
  if (epochs < 1 || batch_steps < 1 || minibatch < 1) {
    throw InputError("train config: epochs, batch and minibatch must be >= 1");
  }
}

void pid_update(LagrangeState& state, double measured_cost_return,
                double cost_limit) {
  const double error = measured_cost_return - cost_limit;
  state.integral = std::max(0.0, state.integral + error);
  const double raw = state.kp * error + state.ki * state.integral +
                     state.kd * (error - state.prev_error);
  state.lambda = std::clamp(raw, 0.0, state.lambda_max);
  state.prev_error = error;
}

LossResult ppo_clip_loss(const nn::GaussianPolicy& pi, const RolloutBatch& batch,
                         std::span<const std::size_t> indices,
                         std::span<const double> reward_adv, double clip,
                         nn::PolicyGradients& grads) {
  return surrogate_loss(pi, batch, indices, reward_adv, {}, clip, 0.0, grads);
}

LossResult ppol_loss(const nn::GaussianPolicy& pi, const RolloutBatch& batch,
                     std::span<const std::size_t> indices,
                     std::span<const double> reward_adv,
                     std::span<const double> cost_adv, double clip,
                     double lambda, nn::PolicyGradients& grads) {
  return surrogate_loss(pi, batch, indices, reward_adv, cost_adv, clip, lambda,
                        grads);
}

UpdateDiagnostics update_policy(nn::GaussianPolicy& pi,
                                const RolloutBatch& batch,
                                std::span<const double> reward_adv,
                                std::span<const double> cost_adv,
                                const LagrangeState& lagrange,
                                const TrainConfig& cfg, Rng& rng,
                                MinibatchPenalty* penalty) {
  cfg.validate();
  batch.validate();

  std::vector<double> r_adv(reward_adv.begin(), reward_adv.end());
  std::vector<double> c_adv(cost_adv.begin(), cost_adv.end());
  normalize_advantages(r_adv);
  // The cost stream is centered and capped at unit variance but never
  // amplified. Blowing a near-constant stream up to std 1 manufactures a
  // full-strength gradient out of critic noise whenever the policy is
  // already safe, and the multiplier weights that noise heavily.
  if (!c_adv.empty()) {
    double mean = 0.0;
    for (const double a : c_adv) mean += a;
    mean /= static_cast<double>(c_adv.size());
    double var = 0.0;
    for (double& a : c_adv) {
      a -= mean;
      var += a * a;
    }
    const double stdev = std::sqrt(var / static_cast<double>(c_adv.size()));
    if (stdev > 1.0) {
      for (double& a : c_adv) a /= stdev;
    }
  }

  const nn::GaussianPolicy snapshot = pi;
  UpdateDiagnostics diag;
  MinibatchPlan plan(batch.size(), static_cast<std::size_t>(cfg.minibatch),
                     rng);
  nn::PolicyGradients grads = nn::PolicyGradients::like(pi);

  for (int step = 0; step < cfg.actor_steps; ++step) {
    const auto indices = plan.next();
    grads.zero();
    const LossResult res = surrogate_loss(pi, batch, indices, r_adv, c_adv,
                                          cfg.clip, lagrange.lambda, grads);
    double total = res.loss;
    bool penalty_finite = true;
    if (penalty != nullptr) {
      const double pen = penalty->apply(pi, batch, indices, grads);
      penalty_finite = std::isfinite(pen);
      total += pen;
    }
    if (!res.finite || !penalty_finite || !grads_finite(grads)) {
      pi = snapshot;
      diag.aborted = true;
      break;
    }
    diag.final_kl = res.approx_kl;
    diag.last_loss = total;
    if (res.approx_kl > 4.0 * cfg.kl_delta) {
      diag.early_stopped = true;
      break;
    }
    nn::apply_sgd(pi, grads, cfg.actor_lr);
    pi.clamp_log_std();
    diag.steps_taken = step + 1;
  }
  return diag;
}

double fit_value_net(nn::Mlp& net, const std::vector<std::vector<double>>& obs,
                     std::span<const double> targets, double lr, int steps,
                     int minibatch, Rng& rng) {
  if (obs.size() != targets.size()) {
    throw SizeError("value fit: observation and target lengths disagree");
  }
  if (obs.empty()) throw InputError("value fit: empty dataset");
  if (steps < 1 || minibatch < 1 || !(lr > 0.0)) {
    throw InputError("value fit: bad optimizer settings");
  }

  MinibatchPlan plan(obs.size(), static_cast<std::size_t>(minibatch), rng);
  nn::MlpGradients grads = nn::MlpGradients::like(net);
  nn::MlpTrace trace;
  std::vector<double> out;
  std::vector<double> d_out(1);
  double last_loss = 0.0;
  for (int step = 0; step < steps; ++step) {
    const auto indices = plan.next();
    grads.zero();
    double loss = 0.0;
    const double count = static_cast<double>(indices.size());
    for (const std::size_t idx : indices) {
      nn::forward(net, obs[idx], trace, out);
      const double err = out[0] - targets[idx];
      loss += err * err;
      d_out[0] = 2.0 * err / count;
      nn::backward(net, trace, d_out, grads);
    }
    last_loss = loss / count;
    nn::apply_sgd(net, grads, lr);
  }
  return last_loss;
}

}  // namespace saferl::learn
