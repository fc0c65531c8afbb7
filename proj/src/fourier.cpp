#include "hsirecon/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <vector>

#include "hsirecon/ops.hpp"

namespace hsirecon::fourier {

namespace {

// fftw planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

// Unitary 2-D DFT over (H, W) for each channel of split re/im storage. The
// inverse is the forward transform with the real and imaginary roles swapped.
Spectrum transform(const Spectrum& in, int sign)
{
    const int H = in.h(), W = in.w(), C = in.c();
    Spectrum out{Tensor::zeros_like(in.re), Tensor::zeros_like(in.im), true};
    Tensor in_re = in.re, in_im = in.im;
    real* ri = sign < 0 ? in_re.data() : in_im.data();
    real* ii = sign < 0 ? in_im.data() : in_re.data();
    real* ro = sign < 0 ? out.re.data() : out.im.data();
    real* io = sign < 0 ? out.im.data() : out.re.data();

    const fftw_iodim dims[2] = {{H, W * C, W * C}, {W, C, C}};
    const fftw_iodim many = {C, 1, 1};
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_guru_split_dft(2, dims, 1, &many, ri, ii, ro, io, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    if (!plan) throw TransformError("could not plan a " + std::to_string(H) + "x" + std::to_string(W) + " transform");
    fftw_execute_split_dft(plan, ri, ii, ro, io);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    const real norm = 1.0 / std::sqrt(static_cast<real>(H) * W);
    out.re *= norm;
    out.im *= norm;
    return out;
}

void require_map(const Tensor& t)
{
    if (t.rank() != 3) throw ShapeError("Fourier transforms expect H x W x C maps, got " + t.shape_str());
}

void require_spectrum(const Spectrum& s)
{
    require_map(s.re);
    require_same_shape(s.re, s.im, "spectrum imaginary part");
}

}  // namespace

Spectrum fft2(const Tensor& map)
{
    require_map(map);
    return transform(Spectrum{map, Tensor::zeros_like(map), true}, -1);
}

Spectrum fft2(const Spectrum& s)
{
    require_spectrum(s);
    return transform(s, -1);
}

Spectrum ifft2(const Spectrum& s)
{
    require_spectrum(s);
    return transform(s, +1);
}

Tensor ifft2_real(const Spectrum& s, real tol)
{
    Spectrum x = ifft2(s);
    const real residue = max_abs(x.im);
    if (residue > tol)
        throw TransformError("inverse transform left an imaginary residue of " + std::to_string(residue) +
                             " (tolerance " + std::to_string(tol) + ")");
    return std::move(x.re);
}

Tensor amplitude(const Spectrum& s)
{
    require_spectrum(s);
    Tensor a = Tensor::zeros_like(s.re);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::hypot(s.re[i], s.im[i]);
    return a;
}

Tensor phase(const Spectrum& s)
{
    require_spectrum(s);
    Tensor p = Tensor::zeros_like(s.re);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::atan2(s.im[i], s.re[i]);
        if (p[i] == -std::numbers::pi) p[i] = std::numbers::pi;  // atan2(-0, x < 0)
    }
    return p;
}

AmplitudePhase decompose(const Spectrum& s) { return {amplitude(s), phase(s)}; }

Spectrum compose_from_amplitude_phase(const Tensor& amp, const Tensor& ph)
{
    require_same_shape(amp, ph, "compose amplitude/phase");
    Spectrum s{Tensor::zeros_like(amp), Tensor::zeros_like(amp), true};
    for (std::size_t i = 0; i < amp.size(); ++i) {
        if (amp[i] < 0) throw std::invalid_argument("amplitude must be non-negative");
        s.re[i] = amp[i] * std::cos(ph[i]);
        s.im[i] = amp[i] * std::sin(ph[i]);
    }
    return s;
}

ad::Var amplitude_phase_mix(const ad::Var& enc_prev, const ad::Var& dec_prev)
{
    require_same_shape(enc_prev.value(), dec_prev.value(), "amplitude/phase mix");
    auto e = std::make_shared<Spectrum>(fft2(enc_prev.value()));
    auto d = std::make_shared<Spectrum>(fft2(dec_prev.value()));
    auto amp = std::make_shared<Tensor>(amplitude(*e));
    auto ph = std::make_shared<Tensor>(phase(*d));
    Tensor out = ifft2_real(compose_from_amplitude_phase(*amp, *ph));

    auto pe = enc_prev.node(), pd = dec_prev.node();
    return ad::make_result(std::move(out), {enc_prev, dec_prev}, [pe, pd, e, d, amp, ph](const Tensor& g) {
        // cotangent of the recombined spectrum; Re(U^H S) pulls back to U g
        const Spectrum gs = fft2(g);
        const std::size_t n = g.size();
        if (pe->requires_grad) {
            Spectrum ge{Tensor::zeros_like(g), Tensor::zeros_like(g), true};
            for (std::size_t i = 0; i < n; ++i) {
                const real ga = std::cos((*ph)[i]) * gs.re[i] + std::sin((*ph)[i]) * gs.im[i];
                const real mag = std::sqrt(e->re[i] * e->re[i] + e->im[i] * e->im[i] + kPolarGuard);
                ge.re[i] = ga * e->re[i] / mag;
                ge.im[i] = ga * e->im[i] / mag;
            }
            pe->accumulate(std::move(ifft2(ge).re));
        }
        if (pd->requires_grad) {
            Spectrum gd{Tensor::zeros_like(g), Tensor::zeros_like(g), true};
            for (std::size_t i = 0; i < n; ++i) {
                const real gp = (*amp)[i] * (std::cos((*ph)[i]) * gs.im[i] - std::sin((*ph)[i]) * gs.re[i]);
                const real mag2 = d->re[i] * d->re[i] + d->im[i] * d->im[i] + kPolarGuard;
                gd.re[i] = -gp * d->im[i] / mag2;
                gd.im[i] = gp * d->re[i] / mag2;
            }
            pd->accumulate(std::move(ifft2(gd).re));
        }
    });
}

ad::Var fft_stage_fusion(const ad::Var& enc_prev, const ad::Var& dec_prev, const ad::Var& enc_curr,
                         const FusionParams& params)
{
    const Tensor& cur = enc_curr.value();
    const Tensor& prev = enc_prev.value();
    if (prev.rank() != 3 || cur.rank() != 3 || prev.h() != cur.h() || prev.w() != cur.w() || prev.c() != cur.c())
        throw ShapeError("stage fusion: previous feature " + prev.shape_str() + " does not match current " +
                         cur.shape_str());
    ad::Var mixed = amplitude_phase_mix(enc_prev, dec_prev);
    return ad::conv2d(ad::concat_channels(mixed, enc_curr), params.weight, params.bias, {3, 1, 1});
}

}  // namespace hsirecon::fourier
