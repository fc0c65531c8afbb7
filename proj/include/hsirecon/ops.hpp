#pragma once

#include <memory>
#include <vector>

#include "hsirecon/autodiff.hpp"
#include "hsirecon/kernels.hpp"

namespace hsirecon::ad {

// elementwise
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, real s);
Var mul_const(const Var& a, std::shared_ptr<const Tensor> field);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var gelu(const Var& a);
Var softplus(const Var& a);

// feature maps (rank 3, H x W x C)
Var concat_channels(const Var& a, const Var& b);
Var conv2d(const Var& x, const Var& weight, const Var& bias, kernels::ConvSpec spec);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, real eps = 1e-5);
Var global_avg_pool(const Var& x);
/// out[h, w, c] = x[h, w, c] * gate[0, 0, c]
Var scale_channels(const Var& x, const Var& gate);
/// out[i] = x[index[i]], shaped `shape`; gradient is scatter-added back.
Var gather(const Var& x, std::vector<int> shape, std::shared_ptr<const std::vector<std::size_t>> index);
Var cube_attention(const Var& q, const Var& k, const Var& v, const Var& beta, kernels::AttentionSpec spec);

// CASSI operator pair with a constant shifted-mask stack
Var cassi_project(const Var& cube, std::shared_ptr<const Tensor> phi, int step);
Var cassi_back_project(const Var& meas, std::shared_ptr<const Tensor> phi, int step);

// scalar reductions
Var mse(const Var& a, const Tensor& target);
Var charbonnier(const Var& a, const Tensor& target, real eps = 1e-3);
/// sum_i a[i] * weights[i]
Var weighted_sum(const Var& a, const Tensor& weights);

}  // namespace hsirecon::ad
