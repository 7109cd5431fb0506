#include "aeos/costnet/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "aeos/common/error.hpp"
#include "aeos/simd/kernels.hpp"

namespace aeos {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ConfigError("mlp: need input and output sizes");
  for (int s : sizes_) {
    if (s < 1) throw ConfigError("mlp: layer sizes must be positive");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(param_count_);
    param_count_ += static_cast<std::size_t>(sizes_[l] + 1) * static_cast<std::size_t>(sizes_[l + 1]);
  }
}

void Mlp::init(std::span<double> params, Rng& rng) const {
  if (params.size() != param_count_) throw InputError("mlp: parameter size mismatch");
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    const std::size_t end = l + 1 < layer_count() ? offsets_[l + 1] : param_count_;
    for (std::size_t i = offsets_[l]; i < end; ++i) params[i] = rng.uniform(-bound, bound);
  }
}

void Mlp::layer_affine(std::span<const double> params, std::size_t layer, std::span<const double> in,
                       std::span<double> out) const {
  const auto n_in = static_cast<std::size_t>(sizes_[layer]);
  const auto n_out = static_cast<std::size_t>(sizes_[layer + 1]);
  const double* b = params.data() + bias_offset(layer);
  std::copy(b, b + n_out, out.begin());
  simd::active().gemv_acc(params.data() + offsets_[layer], n_out, n_in, in.data(), out.data());
}

void Mlp::forward(std::span<const double> params, std::span<const double> x, Cache& cache) const {
  if (params.size() != param_count_) throw InputError("mlp: parameter size mismatch");
  if (x.size() != static_cast<std::size_t>(input_size())) throw InputError("mlp: input size mismatch");
  cache.input.assign(x.begin(), x.end());
  cache.outputs.resize(layer_count());
  std::span<const double> in = cache.input;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    auto& out = cache.outputs[l];
    out.resize(static_cast<std::size_t>(sizes_[l + 1]));
    layer_affine(params, l, in, out);
    if (l + 1 < layer_count()) {
      for (double& v : out) v = std::max(v, 0.0);
    }
    in = out;
  }
}

void Mlp::layer_backward(std::span<const double> params, std::size_t layer, std::span<const double> in,
                         std::span<const double> d_pre, std::span<double> grad,
                         std::span<double> d_in) const {
  const auto n_in = static_cast<std::size_t>(sizes_[layer]);
  const auto n_out = static_cast<std::size_t>(sizes_[layer + 1]);
  const auto& k = simd::active();
  double* gw = grad.data() + offsets_[layer];
  double* gb = grad.data() + bias_offset(layer);
  const double* w = params.data() + offsets_[layer];
  if (!d_in.empty()) std::fill(d_in.begin(), d_in.end(), 0.0);
  for (std::size_t r = 0; r < n_out; ++r) {
    const double d = d_pre[r];
    if (d == 0.0) continue;
    gb[r] += d;
    k.axpy(d, in.data(), gw + r * n_in, n_in);
    if (!d_in.empty()) k.axpy(d, w + r * n_in, d_in.data(), n_in);
  }
}

void Mlp::backward(std::span<const double> params, const Cache& cache, std::span<const double> dy,
                   std::span<double> grad, std::span<double> dx) const {
  if (grad.size() != param_count_) throw InputError("mlp: gradient size mismatch");
  std::vector<double> d(dy.begin(), dy.end());
  std::vector<double> d_in;
  for (std::size_t l = layer_count(); l-- > 0;) {
    const std::span<const double> in = l == 0 ? std::span<const double>(cache.input)
                                              : std::span<const double>(cache.outputs[l - 1]);
    const bool need_in = l > 0 || !dx.empty();
    d_in.assign(need_in ? in.size() : 0, 0.0);
    layer_backward(params, l, in, d, grad, d_in);
    if (l > 0) {
      // Through the ReLU of the previous layer.
      for (std::size_t i = 0; i < d_in.size(); ++i) {
        if (in[i] <= 0.0) d_in[i] = 0.0;
      }
      d.swap(d_in);
    } else if (!dx.empty()) {
      std::copy(d_in.begin(), d_in.end(), dx.begin());
    }
  }
}

}  // namespace aeos
