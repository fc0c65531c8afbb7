#include "hsirecon/cassi.hpp"

#include <cmath>
#include <random>

#include "hsirecon/kernels.hpp"

namespace hsirecon::cassi {

namespace {

Tensor checked_cube(Tensor t)
{
    if (t.rank() != 3) throw ShapeError("hyperspectral cube must be H x W x B, got " + t.shape_str());
    for (real v : t.vec())
        if (!std::isfinite(v)) throw std::invalid_argument("hyperspectral cube contains non-finite values");
    return t;
}

}  // namespace

HsiCube::HsiCube(int height, int width, int bands) : values_({height, width, bands}) {}

HsiCube::HsiCube(Tensor values) : values_(checked_cube(std::move(values))) {}

bool HsiCube::normalized() const
{
    for (real v : values_.vec())
        if (v < 0.0 || v > 1.0) return false;
    return true;
}

CodedAperture::CodedAperture(int height, int width, real fill) : weights_({height, width, 1}, fill)
{
    if (fill < 0.0 || fill > 1.0) throw std::invalid_argument("coded aperture weights must lie in [0, 1]");
}

CodedAperture::CodedAperture(Tensor weights) : weights_(std::move(weights))
{
    if (weights_.rank() == 2) weights_ = Tensor({weights_.dim(0), weights_.dim(1), 1}, weights_.vec());
    if (weights_.rank() != 3) throw ShapeError("coded aperture must be H x W or H x W x B, got " + weights_.shape_str());
    for (real v : weights_.vec())
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("coded aperture weights must lie in [0, 1]");
}

CodedAperture CodedAperture::random_binary(int height, int width, std::uint64_t seed, real p)
{
    std::mt19937_64 rng(seed);
    Tensor w({height, width, 1});
    for (auto& v : w.vec()) v = (static_cast<real>(rng() >> 11) * 0x1.0p-53) < p ? 1.0 : 0.0;
    return CodedAperture(std::move(w));
}

ShiftedMaskStack::ShiftedMaskStack(Tensor weights, DispersionRule rule) : weights_(std::move(weights)), rule_(rule)
{
    if (rule_.step < 1) throw std::invalid_argument("dispersion step must be at least 1");
    if (weights_.rank() != 3 || width() < 1)
        throw ShapeError("shifted mask stack " + weights_.shape_str() + " inconsistent with dispersion step " +
                         std::to_string(rule_.step));
}

Tensor ShiftedMaskStack::unshifted() const
{
    Tensor out({height(), width(), bands()});
    for (int h = 0; h < height(); ++h)
        for (int w = 0; w < width(); ++w)
            for (int b = 0; b < bands(); ++b) out.at(h, w, b) = weights_.at(h, w + rule_.shift(b), b);
    return out;
}

Measurement::Measurement(int height, int shifted_width) : values_({height, shifted_width, 1}) {}

Measurement::Measurement(Tensor values) : values_(std::move(values))
{
    if (values_.rank() == 2) values_ = Tensor({values_.dim(0), values_.dim(1), 1}, values_.vec());
    if (values_.rank() != 3 || values_.c() != 1) throw ShapeError("measurement must be H x Ws, got " + values_.shape_str());
}

ShiftedMaskStack build_shifted_mask(const CodedAperture& mask, int bands, DispersionRule rule)
{
    if (bands < 1) throw std::invalid_argument("band count must be at least 1");
    if (rule.step < 1) throw std::invalid_argument("dispersion step must be at least 1");
    if (mask.per_band() && mask.weights().c() != bands)
        throw ShapeError("per-band mask " + mask.weights().shape_str() + " does not match " + std::to_string(bands) + " bands");
    const int H = mask.height(), W = mask.width();
    Tensor phi({H, rule.shifted_width(W, bands), bands});
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w)
            for (int b = 0; b < bands; ++b) phi.at(h, w + rule.shift(b), b) = mask.weight(h, w, b);
    return ShiftedMaskStack(std::move(phi), rule);
}

Measurement forward_project(const HsiCube& x, const ShiftedMaskStack& phi, const NoiseConfig& noise)
{
    if (x.height() != phi.height() || x.width() != phi.width() || x.bands() != phi.bands())
        throw ShapeError("cube " + x.values().shape_str() + " does not match sensing operator for cube (" +
                         std::to_string(phi.height()) + "x" + std::to_string(phi.width()) + "x" +
                         std::to_string(phi.bands()) + ")");
    Measurement y(kernels::parallel::cassi_forward(x.values(), phi.weights(), phi.rule().step));
    if (noise.sigma < 0) throw std::invalid_argument("noise sigma must be non-negative");
    if (noise.kind == NoiseConfig::Kind::gaussian && noise.sigma > 0) {
        std::mt19937_64 rng(noise.seed);
        std::normal_distribution<real> n(0.0, noise.sigma);
        for (auto& v : y.values().vec()) v += n(rng);
    }
    return y;
}

HsiCube adjoint_project(const Measurement& y, const ShiftedMaskStack& phi)
{
    if (y.height() != phi.height() || y.width() != phi.shifted_width())
        throw ShapeError("measurement " + y.values().shape_str() + " does not match sensing operator " +
                         phi.weights().shape_str());
    return HsiCube(kernels::parallel::cassi_adjoint(y.values(), phi.weights(), phi.rule().step));
}

Measurement phi_phi_t_diag(const ShiftedMaskStack& phi)
{
    Measurement d(phi.height(), phi.shifted_width());
    for (int h = 0; h < phi.height(); ++h)
        for (int c = 0; c < phi.shifted_width(); ++c) {
            real s = 0;
            for (int b = 0; b < phi.bands(); ++b) s += phi(h, c, b) * phi(h, c, b);
            d(h, c) = s;
        }
    return d;
}

namespace {

// (y - Phi z) / (D + shift)
Measurement scaled_residual(const HsiCube& z, const Measurement& y, const ShiftedMaskStack& phi, real shift)
{
    Measurement r = forward_project(z, phi);
    if (!r.values().same_shape(y.values()))
        throw ShapeError("measurement " + y.values().shape_str() + " does not match sensing operator " +
                         phi.weights().shape_str());
    const Measurement d = phi_phi_t_diag(phi);
    for (std::size_t i = 0; i < r.values().size(); ++i)
        r.values()[i] = (y.values()[i] - r.values()[i]) / (d.values()[i] + shift);
    return r;
}

}  // namespace

HsiCube initialize_estimate(const Measurement& y, const ShiftedMaskStack& phi)
{
    Measurement w = phi_phi_t_diag(phi);
    if (!w.values().same_shape(y.values()))
        throw ShapeError("measurement " + y.values().shape_str() + " does not match sensing operator " +
                         phi.weights().shape_str());
    for (std::size_t i = 0; i < w.values().size(); ++i) w.values()[i] = y.values()[i] / (w.values()[i] + kDiagGuard);
    return adjoint_project(w, phi);
}

HsiCube data_step(const HsiCube& z, const Measurement& y, const ShiftedMaskStack& phi, const Tensor& step_field)
{
    require_same_shape(z.values(), step_field, "data_step step field");
    HsiCube x = adjoint_project(scaled_residual(z, y, phi, kDiagGuard), phi);
    for (std::size_t i = 0; i < x.values().size(); ++i)
        x.values()[i] = z.values()[i] + step_field[i] * x.values()[i];
    return x;
}

HsiCube exact_hqs_data_step(const HsiCube& z, const Measurement& y, const ShiftedMaskStack& phi, real mu)
{
    if (!(mu > 0)) throw std::invalid_argument("HQS penalty mu must be positive");
    HsiCube x = adjoint_project(scaled_residual(z, y, phi, mu), phi);
    x.values() += z.values();
    return x;
}

}  // namespace hsirecon::cassi
