#include "hsirecon/ops.hpp"

#include <cmath>

namespace hsirecon::ad {

namespace {

using NodePtr = std::shared_ptr<Node>;

void push(const NodePtr& n, Tensor&& g)
{
    if (n->requires_grad) n->accumulate(std::move(g));
}

void push(const NodePtr& n, const Tensor& g)
{
    if (n->requires_grad) n->accumulate(g);
}

real sigmoid_scalar(real x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

template <class F, class D>
Var unary(const Var& a, F f, D dfdx)
{
    Tensor out = Tensor::zeros_like(a.value());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.value()[i]);
    NodePtr pa = a.node();
    return make_result(std::move(out), {a}, [pa, dfdx](const Tensor& g) {
        Tensor ga = Tensor::zeros_like(g);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * dfdx(pa->value[i]);
        push(pa, std::move(ga));
    });
}

void require_map(const Tensor& t, const char* what)
{
    if (t.rank() != 3) throw ShapeError(std::string(what) + " expects an H x W x C map, got " + t.shape_str());
}

}  // namespace

Var add(const Var& a, const Var& b)
{
    require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    out += b.value();
    NodePtr pa = a.node(), pb = b.node();
    return make_result(std::move(out), {a, b}, [pa, pb](const Tensor& g) {
        push(pa, g);
        push(pb, g);
    });
}

Var sub(const Var& a, const Var& b)
{
    require_same_shape(a.value(), b.value(), "sub");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    NodePtr pa = a.node(), pb = b.node();
    return make_result(std::move(out), {a, b}, [pa, pb](const Tensor& g) {
        push(pa, g);
        if (pb->requires_grad) {
            Tensor gb = g;
            gb *= -1.0;
            pb->accumulate(std::move(gb));
        }
    });
}

Var mul(const Var& a, const Var& b)
{
    require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    NodePtr pa = a.node(), pb = b.node();
    return make_result(std::move(out), {a, b}, [pa, pb](const Tensor& g) {
        if (pa->requires_grad) {
            Tensor ga = g;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] *= pb->value[i];
            pa->accumulate(std::move(ga));
        }
        if (pb->requires_grad) {
            Tensor gb = g;
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] *= pa->value[i];
            pb->accumulate(std::move(gb));
        }
    });
}

Var scale(const Var& a, real s)
{
    Tensor out = a.value();
    out *= s;
    NodePtr pa = a.node();
    return make_result(std::move(out), {a}, [pa, s](const Tensor& g) {
        Tensor ga = g;
        ga *= s;
        push(pa, std::move(ga));
    });
}

Var mul_const(const Var& a, std::shared_ptr<const Tensor> field)
{
    require_same_shape(a.value(), *field, "mul_const");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= (*field)[i];
    NodePtr pa = a.node();
    return make_result(std::move(out), {a}, [pa, field](const Tensor& g) {
        Tensor ga = g;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] *= (*field)[i];
        push(pa, std::move(ga));
    });
}

Var sigmoid(const Var& a)
{
    return unary(a, sigmoid_scalar, [](real x) {
        const real s = sigmoid_scalar(x);
        return s * (1 - s);
    });
}

Var relu(const Var& a)
{
    return unary(a, [](real x) { return x > 0 ? x : 0.0; }, [](real x) { return x > 0 ? 1.0 : 0.0; });
}

Var gelu(const Var& a)
{
    constexpr real inv_sqrt2 = 0.70710678118654752440;
    constexpr real inv_sqrt2pi = 0.39894228040143267794;
    return unary(
        a, [](real x) { return 0.5 * x * (1 + std::erf(x * inv_sqrt2)); },
        [](real x) { return 0.5 * (1 + std::erf(x * inv_sqrt2)) + x * inv_sqrt2pi * std::exp(-0.5 * x * x); });
}

Var softplus(const Var& a)
{
    return unary(a, [](real x) { return x > 30 ? x : std::log1p(std::exp(x)); }, sigmoid_scalar);
}

Var concat_channels(const Var& a, const Var& b)
{
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    require_map(x, "concat");
    require_map(y, "concat");
    if (x.h() != y.h() || x.w() != y.w())
        throw ShapeError("concat: spatial shape " + x.shape_str() + " does not match " + y.shape_str());
    const int ca = x.c(), cb = y.c(), pixels = x.h() * x.w();
    Tensor out({x.h(), x.w(), ca + cb});
    for (int p = 0; p < pixels; ++p) {
        std::copy_n(x.data() + static_cast<std::size_t>(p) * ca, ca, out.data() + static_cast<std::size_t>(p) * (ca + cb));
        std::copy_n(y.data() + static_cast<std::size_t>(p) * cb, cb, out.data() + static_cast<std::size_t>(p) * (ca + cb) + ca);
    }
    NodePtr pa = a.node(), pb = b.node();
    return make_result(std::move(out), {a, b}, [pa, pb, ca, cb, pixels](const Tensor& g) {
        if (pa->requires_grad) {
            Tensor ga = Tensor::zeros_like(pa->value);
            for (int p = 0; p < pixels; ++p)
                std::copy_n(g.data() + static_cast<std::size_t>(p) * (ca + cb), ca, ga.data() + static_cast<std::size_t>(p) * ca);
            pa->accumulate(std::move(ga));
        }
        if (pb->requires_grad) {
            Tensor gb = Tensor::zeros_like(pb->value);
            for (int p = 0; p < pixels; ++p)
                std::copy_n(g.data() + static_cast<std::size_t>(p) * (ca + cb) + ca, cb, gb.data() + static_cast<std::size_t>(p) * cb);
            pb->accumulate(std::move(gb));
        }
    });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, kernels::ConvSpec spec)
{
    Tensor out = kernels::parallel::conv2d_forward(x.value(), weight.value(), bias.value(), spec);
    NodePtr px = x.node(), pw = weight.node(), pb = bias.node();
    return make_result(std::move(out), {x, weight, bias}, [px, pw, pb, spec](const Tensor& g) {
        if (px->requires_grad)
            px->accumulate(kernels::parallel::conv2d_backward_input(g, pw->value, px->value.h(), px->value.w(), spec));
        if (pw->requires_grad || pb->requires_grad) {
            Tensor gw = Tensor::zeros_like(pw->value);
            Tensor gb = Tensor::zeros_like(pb->value);
            kernels::parallel::conv2d_backward_params(g, px->value, spec, gw, gb);
            push(pw, std::move(gw));
            push(pb, std::move(gb));
        }
    });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, real eps)
{
    const Tensor& in = x.value();
    require_map(in, "layer_norm");
    const int C = in.c();
    if (gamma.value().size() != static_cast<std::size_t>(C) || beta.value().size() != static_cast<std::size_t>(C))
        throw ShapeError("layer_norm: affine parameters do not match " + std::to_string(C) + " channels");
    const std::size_t pixels = static_cast<std::size_t>(in.h()) * in.w();
    auto xhat = std::make_shared<Tensor>(Tensor::zeros_like(in));
    auto inv_std = std::make_shared<std::vector<real>>(pixels);
    Tensor out = Tensor::zeros_like(in);
    for (std::size_t p = 0; p < pixels; ++p) {
        const real* xp = in.data() + p * C;
        real mean = 0;
        for (int c = 0; c < C; ++c) mean += xp[c];
        mean /= C;
        real var = 0;
        for (int c = 0; c < C; ++c) var += (xp[c] - mean) * (xp[c] - mean);
        var /= C;
        const real is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[p] = is;
        for (int c = 0; c < C; ++c) {
            const real xh = (xp[c] - mean) * is;
            (*xhat)[p * C + c] = xh;
            out[p * C + c] = gamma.value()[c] * xh + beta.value()[c];
        }
    }
    NodePtr px = x.node(), pg = gamma.node(), pb = beta.node();
    return make_result(std::move(out), {x, gamma, beta}, [px, pg, pb, xhat, inv_std, C, pixels](const Tensor& g) {
        Tensor gg = Tensor::zeros_like(pg->value), gbeta = Tensor::zeros_like(pb->value);
        Tensor gx = Tensor::zeros_like(px->value);
        for (std::size_t p = 0; p < pixels; ++p) {
            real m1 = 0, m2 = 0;
            for (int c = 0; c < C; ++c) {
                const real gi = g[p * C + c];
                const real xh = (*xhat)[p * C + c];
                gg[c] += gi * xh;
                gbeta[c] += gi;
                const real gxh = gi * pg->value[c];
                m1 += gxh;
                m2 += gxh * xh;
            }
            m1 /= C;
            m2 /= C;
            for (int c = 0; c < C; ++c) {
                const real xh = (*xhat)[p * C + c];
                gx[p * C + c] = (*inv_std)[p] * (g[p * C + c] * pg->value[c] - m1 - xh * m2);
            }
        }
        push(px, std::move(gx));
        push(pg, std::move(gg));
        push(pb, std::move(gbeta));
    });
}

Var global_avg_pool(const Var& x)
{
    const Tensor& in = x.value();
    require_map(in, "global_avg_pool");
    const int C = in.c();
    const std::size_t pixels = static_cast<std::size_t>(in.h()) * in.w();
    Tensor out({1, 1, C});
    for (std::size_t p = 0; p < pixels; ++p)
        for (int c = 0; c < C; ++c) out[c] += in[p * C + c];
    out *= 1.0 / static_cast<real>(pixels);
    NodePtr px = x.node();
    return make_result(std::move(out), {x}, [px, C, pixels](const Tensor& g) {
        Tensor gx = Tensor::zeros_like(px->value);
        const real s = 1.0 / static_cast<real>(pixels);
        for (std::size_t p = 0; p < pixels; ++p)
            for (int c = 0; c < C; ++c) gx[p * C + c] = g[c] * s;
        px->accumulate(std::move(gx));
    });
}

Var scale_channels(const Var& x, const Var& gate)
{
    const Tensor& in = x.value();
    require_map(in, "scale_channels");
    const int C = in.c();
    if (gate.value().size() != static_cast<std::size_t>(C))
        throw ShapeError("scale_channels: gate " + gate.value().shape_str() + " does not match map " + in.shape_str());
    const std::size_t pixels = static_cast<std::size_t>(in.h()) * in.w();
    Tensor out = in;
    for (std::size_t p = 0; p < pixels; ++p)
        for (int c = 0; c < C; ++c) out[p * C + c] *= gate.value()[c];
    NodePtr px = x.node(), pg = gate.node();
    return make_result(std::move(out), {x, gate}, [px, pg, C, pixels](const Tensor& g) {
        if (px->requires_grad) {
            Tensor gx = g;
            for (std::size_t p = 0; p < pixels; ++p)
                for (int c = 0; c < C; ++c) gx[p * C + c] *= pg->value[c];
            px->accumulate(std::move(gx));
        }
        if (pg->requires_grad) {
            Tensor gg = Tensor::zeros_like(pg->value);
            for (std::size_t p = 0; p < pixels; ++p)
                for (int c = 0; c < C; ++c) gg[c] += g[p * C + c] * px->value[p * C + c];
            pg->accumulate(std::move(gg));
        }
    });
}

Var gather(const Var& x, std::vector<int> shape, std::shared_ptr<const std::vector<std::size_t>> index)
{
    Tensor out(std::move(shape));
    if (out.size() != index->size()) throw ShapeError("gather: index length does not match output " + out.shape_str());
    const Tensor& in = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[(*index)[i]];
    NodePtr px = x.node();
    return make_result(std::move(out), {x}, [px, index](const Tensor& g) {
        Tensor gx = Tensor::zeros_like(px->value);
        for (std::size_t i = 0; i < g.size(); ++i) gx[(*index)[i]] += g[i];
        px->accumulate(std::move(gx));
    });
}

Var cube_attention(const Var& q, const Var& k, const Var& v, const Var& beta, kernels::AttentionSpec spec)
{
    auto maps = std::make_shared<std::vector<real>>();
    Tensor out = kernels::parallel::cube_attention_forward(q.value(), k.value(), v.value(), beta.value().span(), spec,
                                                           maps.get());
    NodePtr pq = q.node(), pk = k.node(), pv = v.node(), pbeta = beta.node();
    return make_result(std::move(out), {q, k, v, beta}, [pq, pk, pv, pbeta, spec, maps](const Tensor& g) {
        Tensor gq = Tensor::zeros_like(pq->value), gk = Tensor::zeros_like(pk->value), gv = Tensor::zeros_like(pv->value);
        Tensor gb = Tensor::zeros_like(pbeta->value);
        kernels::parallel::cube_attention_backward(g, pq->value, pk->value, pv->value, pbeta->value.span(), spec, *maps,
                                                   gq, gk, gv, gb.span());
        push(pq, std::move(gq));
        push(pk, std::move(gk));
        push(pv, std::move(gv));
        push(pbeta, std::move(gb));
    });
}

Var cassi_project(const Var& cube, std::shared_ptr<const Tensor> phi, int step)
{
    Tensor out = kernels::parallel::cassi_forward(cube.value(), *phi, step);
    NodePtr pc = cube.node();
    return make_result(std::move(out), {cube}, [pc, phi, step](const Tensor& g) {
        pc->accumulate(kernels::parallel::cassi_adjoint(g, *phi, step));
    });
}

Var cassi_back_project(const Var& meas, std::shared_ptr<const Tensor> phi, int step)
{
    Tensor out = kernels::parallel::cassi_adjoint(meas.value(), *phi, step);
    NodePtr pm = meas.node();
    return make_result(std::move(out), {meas}, [pm, phi, step](const Tensor& g) {
        pm->accumulate(kernels::parallel::cassi_forward(g, *phi, step));
    });
}

Var mse(const Var& a, const Tensor& target)
{
    require_same_shape(a.value(), target, "mse");
    const real n = static_cast<real>(target.size());
    real s = 0;
    for (std::size_t i = 0; i < target.size(); ++i) s += (a.value()[i] - target[i]) * (a.value()[i] - target[i]);
    NodePtr pa = a.node();
    auto t = std::make_shared<const Tensor>(target);
    return make_result(Tensor({1}, s / n), {a}, [pa, t, n](const Tensor& g) {
        Tensor ga = Tensor::zeros_like(pa->value);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = g[0] * 2.0 * (pa->value[i] - (*t)[i]) / n;
        pa->accumulate(std::move(ga));
    });
}

Var charbonnier(const Var& a, const Tensor& target, real eps)
{
    require_same_shape(a.value(), target, "charbonnier");
    const real n = static_cast<real>(target.size());
    real s = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const real d = a.value()[i] - target[i];
        s += std::sqrt(d * d + eps * eps);
    }
    NodePtr pa = a.node();
    auto t = std::make_shared<const Tensor>(target);
    return make_result(Tensor({1}, s / n), {a}, [pa, t, n, eps](const Tensor& g) {
        Tensor ga = Tensor::zeros_like(pa->value);
        for (std::size_t i = 0; i < ga.size(); ++i) {
            const real d = pa->value[i] - (*t)[i];
            ga[i] = g[0] * d / (std::sqrt(d * d + eps * eps) * n);
        }
        pa->accumulate(std::move(ga));
    });
}

Var weighted_sum(const Var& a, const Tensor& weights)
{
    const real s = dot(a.value(), weights);
    NodePtr pa = a.node();
    auto w = std::make_shared<const Tensor>(weights);
    return make_result(Tensor({1}, s), {a}, [pa, w](const Tensor& g) {
        Tensor ga = *w;
        ga *= g[0];
        pa->accumulate(std::move(ga));
    });
}

}  // namespace hsirecon::ad
