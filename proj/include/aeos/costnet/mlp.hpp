#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aeos/common/rng.hpp"

namespace aeos {

/// Fully connected network with ReLU hidden layers and a linear output.
/// Parameters live in one flat vector: for each layer, the row-major
/// (out x in) weight matrix followed by the bias.
class Mlp {
 public:
  Mlp() = default;
  /// sizes = {input, hidden..., output}; at least two entries, all positive.
  explicit Mlp(std::vector<int> sizes);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t layer_count() const { return sizes_.size() - 1; }
  std::size_t param_count() const { return param_count_; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + static_cast<std::size_t>(sizes_[layer]) * static_cast<std::size_t>(sizes_[layer + 1]);
  }

  /// Weights and biases uniform in ±1/sqrt(fan_in).
  void init(std::span<double> params, Rng& rng) const;

  /// Activations kept for the backward pass: post-activation output of every
  /// layer (ReLU applied except on the last).
  struct Cache {
    std::vector<double> input;
    std::vector<std::vector<double>> outputs;
  };

  void forward(std::span<const double> params, std::span<const double> x, Cache& cache) const;
  std::span<const double> output(const Cache& cache) const { return cache.outputs.back(); }

  /// Accumulates dL/dparams into `grad` and, when non-empty, writes dL/dx.
  void backward(std::span<const double> params, const Cache& cache, std::span<const double> dy,
                std::span<double> grad, std::span<double> dx = {}) const;

  /// out = W_l in + b_l (no activation).
  void layer_affine(std::span<const double> params, std::size_t layer, std::span<const double> in,
                    std::span<double> out) const;
  /// Given dL/d(pre-activation of layer l) and that layer's input, accumulates
  /// parameter gradients and optionally writes dL/d(input).
  void layer_backward(std::span<const double> params, std::size_t layer, std::span<const double> in,
                      std::span<const double> d_pre, std::span<double> grad,
                      std::span<double> d_in) const;

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t param_count_ = 0;
};

}  // namespace aeos
