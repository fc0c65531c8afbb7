#pragma once

// Hot loops of the reconstruction pipeline. Every kernel exists twice:
// `serial` is the plain reference loop nest used by tests, `parallel` is the
// OpenMP version the model runs. Parallel kernels write each output element
// from exactly one thread with a fixed summation order, so results do not
// depend on the thread count.

#include <span>
#include <vector>

#include "hsirecon/tensor.hpp"

namespace hsirecon::kernels {

/// Convolution geometry: square kernel, symmetric zero padding.
struct ConvSpec {
    int kernel = 3;
    int stride = 1;
    int pad = 1;

    int out_extent(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
};

/// Windowed channel attention geometry. Maps are H x W x C with H and W
/// multiples of `cube`; C is split into `heads` equal groups.
struct AttentionSpec {
    int cube = 8;
    int heads = 1;
};

namespace serial {

// in: H x W x Cin, weight: K x K x Cin x Cout, bias: Cout
Tensor conv2d_forward(const Tensor& in, const Tensor& weight, const Tensor& bias, ConvSpec spec);
Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& weight, int in_h, int in_w, ConvSpec spec);
void conv2d_backward_params(const Tensor& grad_out, const Tensor& in, ConvSpec spec, Tensor& grad_weight,
                            Tensor& grad_bias);

// y[h, w'] = sum_b phi[h, w', b] * x[h, w' - step*b, b]
Tensor cassi_forward(const Tensor& cube, const Tensor& phi, int step);
// x[h, w, b] = phi[h, w + step*b, b] * y[h, w + step*b]
Tensor cassi_adjoint(const Tensor& meas, const Tensor& phi, int step);

// Per cube and head: out = V softmax_col(K^T Q / beta). attn receives the
// d x d maps, cube-major then head-major.
Tensor cube_attention_forward(const Tensor& q, const Tensor& k, const Tensor& v, std::span<const real> beta,
                              AttentionSpec spec, std::vector<real>* attn);
void cube_attention_backward(const Tensor& grad_out, const Tensor& q, const Tensor& k, const Tensor& v,
                             std::span<const real> beta, AttentionSpec spec, const std::vector<real>& attn,
                             Tensor& grad_q, Tensor& grad_k, Tensor& grad_v, std::span<real> grad_beta);

}  // namespace serial

namespace parallel {

Tensor conv2d_forward(const Tensor& in, const Tensor& weight, const Tensor& bias, ConvSpec spec);
Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& weight, int in_h, int in_w, ConvSpec spec);
void conv2d_backward_params(const Tensor& grad_out, const Tensor& in, ConvSpec spec, Tensor& grad_weight,
                            Tensor& grad_bias);

Tensor cassi_forward(const Tensor& cube, const Tensor& phi, int step);
Tensor cassi_adjoint(const Tensor& meas, const Tensor& phi, int step);

Tensor cube_attention_forward(const Tensor& q, const Tensor& k, const Tensor& v, std::span<const real> beta,
                              AttentionSpec spec, std::vector<real>* attn);
void cube_attention_backward(const Tensor& grad_out, const Tensor& q, const Tensor& k, const Tensor& v,
                             std::span<const real> beta, AttentionSpec spec, const std::vector<real>& attn,
                             Tensor& grad_q, Tensor& grad_k, Tensor& grad_v, std::span<real> grad_beta);

}  // namespace parallel

/// Number of worker threads the parallel kernels will use.
int thread_count();

}  // namespace hsirecon::kernels
