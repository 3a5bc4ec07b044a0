#include "saferl/nn/mlp.hpp"

#include <cmath>

#include "saferl/kernels/kernels.hpp"
#include "saferl/util/errors.hpp"

namespace saferl::nn {

Mlp Mlp::create(const std::vector<int>& widths, Rng& rng,
                double final_scale) {
  if (widths.size() < 2) {
    throw InputError("mlp: need at least input and output widths");
  }
  Mlp net;
  net.widths = widths;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    if (in <= 0 || out <= 0) throw InputError("mlp: widths must be positive");
    const double scale = (l + 2 == widths.size() ? final_scale : 1.0) /
                         std::sqrt(static_cast<double>(in));
    std::vector<double> w(static_cast<std::size_t>(out) * in);
    for (auto& v : w) v = rng.uniform(-scale, scale);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(out, 0.0);
  }
  return net;
}

Mlp Mlp::zeros(const std::vector<int>& widths) {
  Rng rng(0);
  Mlp net = create(widths, rng);
  for (auto& w : net.weights) std::fill(w.begin(), w.end(), 0.0);
  return net;
}

void Mlp::validate() const {
  if (widths.size() < 2 || weights.size() != widths.size() - 1 ||
      biases.size() != weights.size()) {
    throw InputError("mlp: inconsistent layer bookkeeping");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const std::size_t expect =
        static_cast<std::size_t>(widths[l + 1]) * widths[l];
    if (weights[l].size() != expect ||
        biases[l].size() != static_cast<std::size_t>(widths[l + 1])) {
      throw InputError("mlp: tensor shape does not chain");
    }
    for (double v : weights[l]) {
      if (!std::isfinite(v)) throw InputError("mlp: non-finite weight");
    }
    for (double v : biases[l]) {
      if (!std::isfinite(v)) throw InputError("mlp: non-finite bias");
    }
  }
}

void forward(const Mlp& net, std::span<const double> input, MlpTrace& trace,
             std::vector<double>& output) {
  if (input.size() != static_cast<std::size_t>(net.input_dim())) {
    throw InputError("mlp forward: input width mismatch");
  }
  const auto& k = kern::active();
  const std::size_t layers = net.layer_count();
  trace.pre.resize(layers);
  trace.act.resize(layers + 1);
  trace.act[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t rows = net.widths[l + 1];
    const std::size_t cols = net.widths[l];
    trace.pre[l].resize(rows);
    k.matvec(net.weights[l].data(), rows, cols, trace.act[l].data(),
             net.biases[l].data(), trace.pre[l].data());
    if (l + 1 == layers) {
      trace.act[l + 1] = trace.pre[l];
    } else {
      trace.act[l + 1].resize(rows);
      k.relu(trace.pre[l].data(), trace.act[l + 1].data(), rows);
    }
  }
  output = trace.act[layers];
}

void forward(const Mlp& net, std::span<const double> input,
             std::vector<double>& output) {
  thread_local MlpTrace trace;
  forward(net, input, trace, output);
}

MlpGradients MlpGradients::like(const Mlp& net) {
  MlpGradients g;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    g.d_weights.emplace_back(net.weights[l].size(), 0.0);
    g.d_biases.emplace_back(net.biases[l].size(), 0.0);
  }
  g.d_input.assign(net.input_dim(), 0.0);
  return g;
}

void MlpGradients::zero() {
  for (auto& w : d_weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : d_biases) std::fill(b.begin(), b.end(), 0.0);
  std::fill(d_input.begin(), d_input.end(), 0.0);
}

void MlpGradients::accumulate(const MlpGradients& other, double scale) {
  const auto& k = kern::active();
  for (std::size_t l = 0; l < d_weights.size(); ++l) {
    k.axpy(scale, other.d_weights[l].data(), d_weights[l].data(),
           d_weights[l].size());
    k.axpy(scale, other.d_biases[l].data(), d_biases[l].data(),
           d_biases[l].size());
  }
  k.axpy(scale, other.d_input.data(), d_input.data(), d_input.size());
}

void backward(const Mlp& net, const MlpTrace& trace,
              std::span<const double> output_grad, MlpGradients& grads) {
  if (output_grad.size() != static_cast<std::size_t>(net.output_dim())) {
    throw InputError("mlp backward: output gradient width mismatch");
  }
  if (trace.act.size() != net.layer_count() + 1) {
    throw InputError("mlp backward: trace does not match network");
  }
  const auto& k = kern::active();
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (std::size_t l = net.layer_count(); l-- > 0;) {
    const std::size_t rows = net.widths[l + 1];
    const std::size_t cols = net.widths[l];
    // Output layer is linear; hidden layers gate the incoming gradient.
    if (l + 1 != net.layer_count()) {
      std::vector<double> gated(rows);
      k.relu_bwd(trace.pre[l].data(), delta.data(), gated.data(), rows);
      delta = std::move(gated);
    }
    k.rank1_acc(delta.data(), rows, trace.act[l].data(), cols,
                grads.d_weights[l].data());
    k.axpy(1.0, delta.data(), grads.d_biases[l].data(), rows);
    std::vector<double> prev(cols, 0.0);
    k.matvec_t_acc(net.weights[l].data(), rows, cols, delta.data(),
                   prev.data());
    delta = std::move(prev);
  }
  grads.d_input = std::move(delta);
}

void apply_sgd(Mlp& net, const MlpGradients& grads, double lr) {
  const auto& k = kern::active();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    k.axpy(-lr, grads.d_weights[l].data(), net.weights[l].data(),
           net.weights[l].size());
    k.axpy(-lr, grads.d_biases[l].data(), net.biases[l].data(),
           net.biases[l].size());
  }
}

}  // namespace saferl::nn
