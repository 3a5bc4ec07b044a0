#pragma once

#include <span>
#include <vector>

#include "saferl/util/rng.hpp"

namespace saferl::nn {

// Dense MLP with rectifier hidden layers and an identity output layer.
// Weight matrices are row-major (out x in).
struct Mlp {
  std::vector<int> widths;  // [input, hidden..., output]
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  std::size_t layer_count() const { return weights.size(); }

  // Scaled uniform fan-in init; the last layer is additionally scaled by
  // final_scale.
  static Mlp create(const std::vector<int>& widths, Rng& rng,
                    double final_scale = 1.0);
  static Mlp zeros(const std::vector<int>& widths);

  void validate() const;
};

// Intermediate activations captured during a forward pass; required by
// backward. act[0] is the input, act[l] the output of layer l after the
// nonlinearity; pre[l] is layer l's affine output.
struct MlpTrace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> act;
};

void forward(const Mlp& net, std::span<const double> input, MlpTrace& trace,
             std::vector<double>& output);

// Convenience pass without gradient bookkeeping.
void forward(const Mlp& net, std::span<const double> input,
             std::vector<double>& output);

struct MlpGradients {
  std::vector<std::vector<double>> d_weights;
  std::vector<std::vector<double>> d_biases;
  std::vector<double> d_input;

  static MlpGradients like(const Mlp& net);
  void zero();
  // this += scale * other
  void accumulate(const MlpGradients& other, double scale);
};

// Reverse pass for the trace's input; parameter gradients are accumulated
// into grads (callers zero them between batches), the input gradient is
// overwritten.
void backward(const Mlp& net, const MlpTrace& trace,
              std::span<const double> output_grad, MlpGradients& grads);

// theta -= lr * grad for every parameter tensor.
void apply_sgd(Mlp& net, const MlpGradients& grads, double lr);

}  // namespace saferl::nn
