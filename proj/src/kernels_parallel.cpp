#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kernels_common.hpp"

namespace hsirecon::kernels {

int thread_count()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace parallel {

Tensor conv2d_forward(const Tensor& in, const Tensor& weight, const Tensor& bias, ConvSpec spec)
{
    detail::check_conv(in, weight, bias, spec);
    const int H = in.h(), W = in.w(), cin = in.c(), cout = weight.dim(3), k = spec.kernel;
    const int oh = spec.out_extent(H), ow = spec.out_extent(W);
    Tensor out({oh, ow, cout});
    const real* x = in.data();
    const real* wt = weight.data();
    real* y = out.data();

#pragma omp parallel for schedule(static)
    for (int oi = 0; oi < oh; ++oi) {
        for (int oj = 0; oj < ow; ++oj) {
            real* yo = y + (static_cast<std::size_t>(oi) * ow + oj) * cout;
            std::copy(bias.data(), bias.data() + cout, yo);
            for (int kh = 0; kh < k; ++kh) {
                const int i = oi * spec.stride - spec.pad + kh;
                if (i < 0 || i >= H) continue;
                for (int kw = 0; kw < k; ++kw) {
                    const int j = oj * spec.stride - spec.pad + kw;
                    if (j < 0 || j >= W) continue;
                    const real* xi = x + (static_cast<std::size_t>(i) * W + j) * cin;
                    const real* wk = wt + (static_cast<std::size_t>(kh) * k + kw) * cin * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const real xv = xi[ci];
                        const real* wr = wk + static_cast<std::size_t>(ci) * cout;
                        for (int co = 0; co < cout; ++co) yo[co] += xv * wr[co];
                    }
                }
            }
        }
    }
    return out;
}

Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& weight, int in_h, int in_w, ConvSpec spec)
{
    const int cin = weight.dim(2), cout = weight.dim(3), k = spec.kernel;
    const int oh = grad_out.h(), ow = grad_out.w();
    Tensor grad_in({in_h, in_w, cin});
    const real* g = grad_out.data();
    const real* wt = weight.data();
    real* gx = grad_in.data();

    // gather form: each input pixel sums over the output taps that read it
#pragma omp parallel for schedule(static)
    for (int i = 0; i < in_h; ++i) {
        for (int j = 0; j < in_w; ++j) {
            real* gi = gx + (static_cast<std::size_t>(i) * in_w + j) * cin;
            for (int kh = 0; kh < k; ++kh) {
                const int ti = i + spec.pad - kh;
                if (ti < 0 || ti % spec.stride) continue;
                const int oi = ti / spec.stride;
                if (oi >= oh) continue;
                for (int kw = 0; kw < k; ++kw) {
                    const int tj = j + spec.pad - kw;
                    if (tj < 0 || tj % spec.stride) continue;
                    const int oj = tj / spec.stride;
                    if (oj >= ow) continue;
                    const real* go = g + (static_cast<std::size_t>(oi) * ow + oj) * cout;
                    const real* wk = wt + (static_cast<std::size_t>(kh) * k + kw) * cin * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const real* wr = wk + static_cast<std::size_t>(ci) * cout;
                        real s = 0;
                        for (int co = 0; co < cout; ++co) s += go[co] * wr[co];
                        gi[ci] += s;
                    }
                }
            }
        }
    }
    return grad_in;
}

void conv2d_backward_params(const Tensor& grad_out, const Tensor& in, ConvSpec spec, Tensor& grad_weight,
                            Tensor& grad_bias)
{
    const int H = in.h(), W = in.w(), cin = in.c(), cout = grad_out.c(), k = spec.kernel;
    const int oh = grad_out.h(), ow = grad_out.w();
    const real* g = grad_out.data();
    const real* x = in.data();
    real* gw = grad_weight.data();
    const int taps = k * k;

#pragma omp parallel for schedule(static)
    for (int t = 0; t < taps; ++t) {
        const int kh = t / k, kw = t % k;
        real* gwt = gw + static_cast<std::size_t>(t) * cin * cout;
        for (int oi = 0; oi < oh; ++oi) {
            const int i = oi * spec.stride - spec.pad + kh;
            if (i < 0 || i >= H) continue;
            for (int oj = 0; oj < ow; ++oj) {
                const int j = oj * spec.stride - spec.pad + kw;
                if (j < 0 || j >= W) continue;
                const real* xi = x + (static_cast<std::size_t>(i) * W + j) * cin;
                const real* go = g + (static_cast<std::size_t>(oi) * ow + oj) * cout;
                for (int ci = 0; ci < cin; ++ci) {
                    const real xv = xi[ci];
                    real* row = gwt + static_cast<std::size_t>(ci) * cout;
                    for (int co = 0; co < cout; ++co) row[co] += xv * go[co];
                }
            }
        }
    }
    for (int p = 0; p < oh * ow; ++p)
        for (int co = 0; co < cout; ++co) grad_bias[co] += g[static_cast<std::size_t>(p) * cout + co];
}

Tensor cassi_forward(const Tensor& cube, const Tensor& phi, int step)
{
    detail::check_cassi(cube, phi, step);
    const int H = phi.h(), Ws = phi.w(), B = phi.c(), W = cube.w();
    Tensor meas({H, Ws, 1});
#pragma omp parallel for schedule(static)
    for (int h = 0; h < H; ++h)
        for (int col = 0; col < Ws; ++col) {
            real s = 0;
            for (int b = 0; b < B; ++b) {
                const int w = col - step * b;
                if (w < 0 || w >= W) continue;
                s += phi.at(h, col, b) * cube.at(h, w, b);
            }
            meas.at(h, col, 0) = s;
        }
    return meas;
}

Tensor cassi_adjoint(const Tensor& meas, const Tensor& phi, int step)
{
    detail::check_cassi_meas(meas, phi);
    const int H = phi.h(), B = phi.c();
    const int W = phi.w() - step * (B - 1);
    if (W < 1) throw ShapeError("shifted mask stack " + phi.shape_str() + " inconsistent with step " + std::to_string(step));
    Tensor cube({H, W, B});
#pragma omp parallel for schedule(static)
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w)
            for (int b = 0; b < B; ++b) {
                const int col = w + step * b;
                cube.at(h, w, b) = phi.at(h, col, b) * meas.at(h, col, 0);
            }
    return cube;
}

namespace {

// Copies one head of one cube into contiguous n x d row-major storage.
void load_block(const Tensor& t, int cy, int cx, int L, int c0, int d, real* dst)
{
    for (int py = 0; py < L; ++py)
        for (int px = 0; px < L; ++px) {
            const real* src = t.data() + (static_cast<std::size_t>(cy * L + py) * t.w() + cx * L + px) * t.c() + c0;
            std::copy(src, src + d, dst + (static_cast<std::size_t>(py) * L + px) * d);
        }
}

void store_block(Tensor& t, int cy, int cx, int L, int c0, int d, const real* src, bool accumulate)
{
    for (int py = 0; py < L; ++py)
        for (int px = 0; px < L; ++px) {
            real* dst = t.data() + (static_cast<std::size_t>(cy * L + py) * t.w() + cx * L + px) * t.c() + c0;
            const real* s = src + (static_cast<std::size_t>(py) * L + px) * d;
            for (int c = 0; c < d; ++c) dst[c] = accumulate ? dst[c] + s[c] : s[c];
        }
}

// m[r][c] = sum_p K[p][r] Q[p][c]
void gram(const real* kb, const real* qb, int n, int d, real* m)
{
    std::fill(m, m + static_cast<std::size_t>(d) * d, 0.0);
    for (int p = 0; p < n; ++p) {
        const real* kp = kb + static_cast<std::size_t>(p) * d;
        const real* qp = qb + static_cast<std::size_t>(p) * d;
        for (int r = 0; r < d; ++r) {
            const real kv = kp[r];
            real* mr = m + static_cast<std::size_t>(r) * d;
            for (int c = 0; c < d; ++c) mr[c] += kv * qp[c];
        }
    }
}

}  // namespace

Tensor cube_attention_forward(const Tensor& q, const Tensor& k, const Tensor& v, std::span<const real> beta,
                              AttentionSpec spec, std::vector<real>* attn)
{
    detail::check_attention(q, k, v, beta, spec);
    const int L = spec.cube, d = q.c() / spec.heads, n = L * L, heads = spec.heads;
    const int gx = q.w() / L;
    const int jobs = (q.h() / L) * gx * heads;
    Tensor out = Tensor::zeros_like(q);
    if (attn) attn->assign(detail::attention_map_count(q, spec), 0.0);

#pragma omp parallel
    {
        std::vector<real> qb(static_cast<std::size_t>(n) * d), kb(qb.size()), vb(qb.size()), ob(qb.size());
        std::vector<real> a(static_cast<std::size_t>(d) * d);
#pragma omp for schedule(static)
        for (int job = 0; job < jobs; ++job) {
            const int hd = job % heads, cube = job / heads;
            const int cy = cube / gx, cx = cube % gx;
            load_block(q, cy, cx, L, hd * d, d, qb.data());
            load_block(k, cy, cx, L, hd * d, d, kb.data());
            load_block(v, cy, cx, L, hd * d, d, vb.data());
            gram(kb.data(), qb.data(), n, d, a.data());
            const real inv_beta = 1.0 / beta[hd];
            for (auto& x : a) x *= inv_beta;
            for (int c = 0; c < d; ++c) {
                real m = a[c];
                for (int r = 1; r < d; ++r) m = std::max(m, a[r * d + c]);
                real z = 0;
                for (int r = 0; r < d; ++r) z += (a[r * d + c] = std::exp(a[r * d + c] - m));
                for (int r = 0; r < d; ++r) a[r * d + c] /= z;
            }
            for (int p = 0; p < n; ++p) {
                const real* vp = vb.data() + static_cast<std::size_t>(p) * d;
                real* op = ob.data() + static_cast<std::size_t>(p) * d;
                std::fill(op, op + d, 0.0);
                for (int r = 0; r < d; ++r) {
                    const real vv = vp[r];
                    const real* ar = a.data() + static_cast<std::size_t>(r) * d;
                    for (int c = 0; c < d; ++c) op[c] += vv * ar[c];
                }
            }
            store_block(out, cy, cx, L, hd * d, d, ob.data(), false);
            if (attn) std::copy(a.begin(), a.end(), attn->begin() + static_cast<std::ptrdiff_t>(job) * d * d);
        }
    }
    return out;
}

void cube_attention_backward(const Tensor& grad_out, const Tensor& q, const Tensor& k, const Tensor& v,
                             std::span<const real> beta, AttentionSpec spec, const std::vector<real>& attn,
                             Tensor& grad_q, Tensor& grad_k, Tensor& grad_v, std::span<real> grad_beta)
{
    detail::check_attention(q, k, v, beta, spec);
    const int L = spec.cube, d = q.c() / spec.heads, n = L * L, heads = spec.heads;
    const int gx = q.w() / L;
    const int jobs = (q.h() / L) * gx * heads;
    std::vector<real> beta_parts(static_cast<std::size_t>(jobs), 0.0);

#pragma omp parallel
    {
        const std::size_t blk = static_cast<std::size_t>(n) * d;
        std::vector<real> qb(blk), kb(blk), vb(blk), gob(blk), gqb(blk), gkb(blk), gvb(blk);
        std::vector<real> ga(static_cast<std::size_t>(d) * d), gs(ga.size()), m(ga.size());
#pragma omp for schedule(static)
        for (int job = 0; job < jobs; ++job) {
            const int hd = job % heads, cube = job / heads;
            const int cy = cube / gx, cx = cube % gx;
            const real* a = attn.data() + static_cast<std::size_t>(job) * d * d;
            load_block(q, cy, cx, L, hd * d, d, qb.data());
            load_block(k, cy, cx, L, hd * d, d, kb.data());
            load_block(v, cy, cx, L, hd * d, d, vb.data());
            load_block(grad_out, cy, cx, L, hd * d, d, gob.data());

            // ga = V^T G ; gV = G A^T
            gram(vb.data(), gob.data(), n, d, ga.data());
            for (int p = 0; p < n; ++p) {
                const real* gp = gob.data() + static_cast<std::size_t>(p) * d;
                real* gv = gvb.data() + static_cast<std::size_t>(p) * d;
                for (int r = 0; r < d; ++r) {
                    const real* ar = a + static_cast<std::size_t>(r) * d;
                    real s = 0;
                    for (int c = 0; c < d; ++c) s += gp[c] * ar[c];
                    gv[r] = s;
                }
            }
            const real inv_beta = 1.0 / beta[hd];
            for (int c = 0; c < d; ++c) {
                real s = 0;
                for (int r = 0; r < d; ++r) s += a[r * d + c] * ga[r * d + c];
                for (int r = 0; r < d; ++r) gs[r * d + c] = a[r * d + c] * (ga[r * d + c] - s);
            }
            gram(kb.data(), qb.data(), n, d, m.data());
            real gb = 0;
            for (std::size_t i = 0; i < m.size(); ++i) gb -= gs[i] * m[i];
            beta_parts[static_cast<std::size_t>(job)] = gb * inv_beta * inv_beta;
            for (auto& x : gs) x *= inv_beta;

            // gK = Q gs^T ; gQ = K gs
            for (int p = 0; p < n; ++p) {
                const real* qp = qb.data() + static_cast<std::size_t>(p) * d;
                const real* kp = kb.data() + static_cast<std::size_t>(p) * d;
                real* gk = gkb.data() + static_cast<std::size_t>(p) * d;
                real* gq = gqb.data() + static_cast<std::size_t>(p) * d;
                std::fill(gq, gq + d, 0.0);
                for (int r = 0; r < d; ++r) {
                    const real* gr = gs.data() + static_cast<std::size_t>(r) * d;
                    real s = 0;
                    for (int c = 0; c < d; ++c) s += qp[c] * gr[c];
                    gk[r] = s;
                    const real kv = kp[r];
                    for (int c = 0; c < d; ++c) gq[c] += kv * gr[c];
                }
            }
            store_block(grad_q, cy, cx, L, hd * d, d, gqb.data(), true);
            store_block(grad_k, cy, cx, L, hd * d, d, gkb.data(), true);
            store_block(grad_v, cy, cx, L, hd * d, d, gvb.data(), true);
        }
    }
    for (int job = 0; job < jobs; ++job) grad_beta[job % heads] += beta_parts[static_cast<std::size_t>(job)];
}

}  // namespace parallel
}  // namespace hsirecon::kernels
