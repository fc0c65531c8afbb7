#include <algorithm>
#include <cmath>

#include "kernels_common.hpp"

namespace hsirecon::kernels::serial {

Tensor conv2d_forward(const Tensor& in, const Tensor& weight, const Tensor& bias, ConvSpec spec)
{
    detail::check_conv(in, weight, bias, spec);
    const int oh = spec.out_extent(in.h()), ow = spec.out_extent(in.w());
    const int cin = in.c(), cout = weight.dim(3), k = spec.kernel;
    Tensor out({oh, ow, cout});
    for (int oi = 0; oi < oh; ++oi)
        for (int oj = 0; oj < ow; ++oj)
            for (int co = 0; co < cout; ++co) {
                real acc = bias[co];
                for (int kh = 0; kh < k; ++kh)
                    for (int kw = 0; kw < k; ++kw) {
                        const int i = oi * spec.stride - spec.pad + kh;
                        const int j = oj * spec.stride - spec.pad + kw;
                        if (i < 0 || j < 0 || i >= in.h() || j >= in.w()) continue;
                        for (int ci = 0; ci < cin; ++ci)
                            acc += in.at(i, j, ci) * weight[((static_cast<std::size_t>(kh) * k + kw) * cin + ci) * cout + co];
                    }
                out.at(oi, oj, co) = acc;
            }
    return out;
}

Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& weight, int in_h, int in_w, ConvSpec spec)
{
    const int cin = weight.dim(2), cout = weight.dim(3), k = spec.kernel;
    Tensor grad_in({in_h, in_w, cin});
    for (int oi = 0; oi < grad_out.h(); ++oi)
        for (int oj = 0; oj < grad_out.w(); ++oj)
            for (int kh = 0; kh < k; ++kh)
                for (int kw = 0; kw < k; ++kw) {
                    const int i = oi * spec.stride - spec.pad + kh;
                    const int j = oj * spec.stride - spec.pad + kw;
                    if (i < 0 || j < 0 || i >= in_h || j >= in_w) continue;
                    for (int ci = 0; ci < cin; ++ci)
                        for (int co = 0; co < cout; ++co)
                            grad_in.at(i, j, ci) += grad_out.at(oi, oj, co) *
                                                    weight[((static_cast<std::size_t>(kh) * k + kw) * cin + ci) * cout + co];
                }
    return grad_in;
}

void conv2d_backward_params(const Tensor& grad_out, const Tensor& in, ConvSpec spec, Tensor& grad_weight,
                            Tensor& grad_bias)
{
    const int cin = in.c(), cout = grad_out.c(), k = spec.kernel;
    for (int oi = 0; oi < grad_out.h(); ++oi)
        for (int oj = 0; oj < grad_out.w(); ++oj) {
            for (int co = 0; co < cout; ++co) grad_bias[co] += grad_out.at(oi, oj, co);
            for (int kh = 0; kh < k; ++kh)
                for (int kw = 0; kw < k; ++kw) {
                    const int i = oi * spec.stride - spec.pad + kh;
                    const int j = oj * spec.stride - spec.pad + kw;
                    if (i < 0 || j < 0 || i >= in.h() || j >= in.w()) continue;
                    for (int ci = 0; ci < cin; ++ci)
                        for (int co = 0; co < cout; ++co)
                            grad_weight[((static_cast<std::size_t>(kh) * k + kw) * cin + ci) * cout + co] +=
                                in.at(i, j, ci) * grad_out.at(oi, oj, co);
                }
        }
}

Tensor cassi_forward(const Tensor& cube, const Tensor& phi, int step)
{
    detail::check_cassi(cube, phi, step);
    Tensor meas({phi.h(), phi.w(), 1});
    for (int h = 0; h < cube.h(); ++h)
        for (int w = 0; w < cube.w(); ++w)
            for (int b = 0; b < cube.c(); ++b) {
                const int col = w + step * b;
                meas.at(h, col, 0) += phi.at(h, col, b) * cube.at(h, w, b);
            }
    return meas;
}

Tensor cassi_adjoint(const Tensor& meas, const Tensor& phi, int step)
{
    detail::check_cassi_meas(meas, phi);
    const int bands = phi.c();
    const int width = phi.w() - step * (bands - 1);
    if (width < 1) throw ShapeError("shifted mask stack " + phi.shape_str() + " inconsistent with step " + std::to_string(step));
    Tensor cube({phi.h(), width, bands});
    for (int h = 0; h < cube.h(); ++h)
        for (int w = 0; w < width; ++w)
            for (int b = 0; b < bands; ++b) {
                const int col = w + step * b;
                cube.at(h, w, b) = phi.at(h, col, b) * meas.at(h, col, 0);
            }
    return cube;
}

Tensor cube_attention_forward(const Tensor& q, const Tensor& k, const Tensor& v, std::span<const real> beta,
                              AttentionSpec spec, std::vector<real>* attn)
{
    detail::check_attention(q, k, v, beta, spec);
    const int L = spec.cube, d = q.c() / spec.heads, n = L * L;
    const int gy = q.h() / L, gx = q.w() / L;
    Tensor out = Tensor::zeros_like(q);
    if (attn) attn->assign(detail::attention_map_count(q, spec), 0.0);
    std::vector<real> a(static_cast<std::size_t>(d) * d);
    for (int cy = 0; cy < gy; ++cy)
        for (int cx = 0; cx < gx; ++cx)
            for (int hd = 0; hd < spec.heads; ++hd) {
                auto pos = [&](int p) { return std::pair{cy * L + p / L, cx * L + p % L}; };
                // logits a[r][c] = sum_p K[p][r] Q[p][c] / beta
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c) {
                        real s = 0;
                        for (int p = 0; p < n; ++p) {
                            auto [i, j] = pos(p);
                            s += k.at(i, j, hd * d + r) * q.at(i, j, hd * d + c);
                        }
                        a[r * d + c] = s / beta[hd];
                    }
                for (int c = 0; c < d; ++c) {
                    real m = a[c];
                    for (int r = 1; r < d; ++r) m = std::max(m, a[r * d + c]);
                    real z = 0;
                    for (int r = 0; r < d; ++r) z += (a[r * d + c] = std::exp(a[r * d + c] - m));
                    for (int r = 0; r < d; ++r) a[r * d + c] /= z;
                }
                for (int p = 0; p < n; ++p) {
                    auto [i, j] = pos(p);
                    for (int c = 0; c < d; ++c) {
                        real s = 0;
                        for (int r = 0; r < d; ++r) s += v.at(i, j, hd * d + r) * a[r * d + c];
                        out.at(i, j, hd * d + c) = s;
                    }
                }
                if (attn) {
                    const std::size_t base = ((static_cast<std::size_t>(cy) * gx + cx) * spec.heads + hd) * d * d;
                    std::copy(a.begin(), a.end(), attn->begin() + static_cast<std::ptrdiff_t>(base));
                }
            }
    return out;
}

void cube_attention_backward(const Tensor& grad_out, const Tensor& q, const Tensor& k, const Tensor& v,
                             std::span<const real> beta, AttentionSpec spec, const std::vector<real>& attn,
                             Tensor& grad_q, Tensor& grad_k, Tensor& grad_v, std::span<real> grad_beta)
{
    detail::check_attention(q, k, v, beta, spec);
    const int L = spec.cube, d = q.c() / spec.heads, n = L * L;
    const int gy = q.h() / L, gx = q.w() / L;
    std::vector<real> ga(static_cast<std::size_t>(d) * d), gs(ga.size());
    for (int cy = 0; cy < gy; ++cy)
        for (int cx = 0; cx < gx; ++cx)
            for (int hd = 0; hd < spec.heads; ++hd) {
                auto pos = [&](int p) { return std::pair{cy * L + p / L, cx * L + p % L}; };
                const real* a = attn.data() + ((static_cast<std::size_t>(cy) * gx + cx) * spec.heads + hd) * d * d;
                std::fill(ga.begin(), ga.end(), 0.0);
                for (int p = 0; p < n; ++p) {
                    auto [i, j] = pos(p);
                    for (int r = 0; r < d; ++r)
                        for (int c = 0; c < d; ++c) {
                            ga[r * d + c] += v.at(i, j, hd * d + r) * grad_out.at(i, j, hd * d + c);
                            grad_v.at(i, j, hd * d + r) += grad_out.at(i, j, hd * d + c) * a[r * d + c];
                        }
                }
                // column softmax backward, then through the 1/beta scaling
                for (int c = 0; c < d; ++c) {
                    real s = 0;
                    for (int r = 0; r < d; ++r) s += a[r * d + c] * ga[r * d + c];
                    for (int r = 0; r < d; ++r) gs[r * d + c] = a[r * d + c] * (ga[r * d + c] - s);
                }
                real gb = 0;
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c) {
                        real m = 0;
                        for (int p = 0; p < n; ++p) {
                            auto [i, j] = pos(p);
                            m += k.at(i, j, hd * d + r) * q.at(i, j, hd * d + c);
                        }
                        gb -= gs[r * d + c] * m / (beta[hd] * beta[hd]);
                    }
                grad_beta[hd] += gb;
                for (int p = 0; p < n; ++p) {
                    auto [i, j] = pos(p);
                    for (int r = 0; r < d; ++r)
                        for (int c = 0; c < d; ++c) {
                            grad_k.at(i, j, hd * d + r) += q.at(i, j, hd * d + c) * gs[r * d + c] / beta[hd];
                            grad_q.at(i, j, hd * d + c) += k.at(i, j, hd * d + r) * gs[r * d + c] / beta[hd];
                        }
                }
            }
}

}  // namespace hsirecon::kernels::serial
