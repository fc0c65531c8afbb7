#pragma once

// Coded-aperture snapshot spectral imaging: mask modulation, per-band
// horizontal dispersion and detector integration, with the exact adjoint.

#include <cstdint>
#include <optional>

#include "hsirecon/tensor.hpp"

namespace hsirecon::cassi {

/// H x W x B radiance cube. Finite values; `normalized()` reports whether
/// every voxel lies in [0, 1].
class HsiCube {
public:
    HsiCube(int height, int width, int bands);
    explicit HsiCube(Tensor values);

    int height() const { return values_.h(); }
    int width() const { return values_.w(); }
    int bands() const { return values_.c(); }
    real& operator()(int h, int w, int b) { return values_.at(h, w, b); }
    real operator()(int h, int w, int b) const { return values_.at(h, w, b); }

    const Tensor& values() const { return values_; }
    Tensor& values() { return values_; }
    bool normalized() const;

private:
    Tensor values_;
};

/// Coded aperture. Either one H x W pattern shared by all bands (the
/// physical single-mask case) or an H x W x B stack of per-band patterns.
class CodedAperture {
public:
    CodedAperture(int height, int width, real fill = 1.0);
    explicit CodedAperture(Tensor weights);

    /// Seeded Bernoulli(p) binary mask.
    static CodedAperture random_binary(int height, int width, std::uint64_t seed, real p = 0.5);

    int height() const { return weights_.h(); }
    int width() const { return weights_.w(); }
    bool per_band() const { return weights_.c() > 1; }
    real weight(int h, int w, int band) const { return weights_.at(h, w, per_band() ? band : 0); }
    real& operator()(int h, int w) { return weights_.at(h, w, 0); }

    const Tensor& weights() const { return weights_; }

private:
    Tensor weights_;
};

struct DispersionRule {
    int step = 1;

    int shift(int band) const { return step * band; }
    int shifted_width(int width, int bands) const { return width + step * (bands - 1); }
};

/// The sensing operator in shifted-mask form, H x (W + s(B-1)) x B.
class ShiftedMaskStack {
public:
    ShiftedMaskStack(Tensor weights, DispersionRule rule);

    int height() const { return weights_.h(); }
    int width() const { return weights_.w() - rule_.step * (bands() - 1); }
    int shifted_width() const { return weights_.w(); }
    int bands() const { return weights_.c(); }
    DispersionRule rule() const { return rule_; }
    real operator()(int h, int ws, int b) const { return weights_.at(h, ws, b); }

    const Tensor& weights() const { return weights_; }

    /// Mask stack moved back to the cube frame: out[h, w, b] = phi[h, w + s*b, b].
    Tensor unshifted() const;

private:
    Tensor weights_;
    DispersionRule rule_;
};

/// Coded snapshot, H x Ws stored as an H x Ws x 1 tensor.
class Measurement {
public:
    Measurement(int height, int shifted_width);
    explicit Measurement(Tensor values);

    int height() const { return values_.h(); }
    int width() const { return values_.w(); }
    real& operator()(int h, int w) { return values_.at(h, w, 0); }
    real operator()(int h, int w) const { return values_.at(h, w, 0); }

    const Tensor& values() const { return values_; }
    Tensor& values() { return values_; }

private:
    Tensor values_;
};

struct NoiseConfig {
    enum class Kind { none, gaussian };
    Kind kind = Kind::none;
    real sigma = 0.0;
    std::uint64_t seed = 0;
};

/// Guard added to every division by the diagonal of Phi Phi^T.
inline constexpr real kDiagGuard = 1e-6;

ShiftedMaskStack build_shifted_mask(const CodedAperture& mask, int bands, DispersionRule rule);

Measurement forward_project(const HsiCube& x, const ShiftedMaskStack& phi, const NoiseConfig& noise = {});
HsiCube adjoint_project(const Measurement& y, const ShiftedMaskStack& phi);

/// D[h, w'] = sum_b phi[h, w', b]^2, the diagonal of Phi Phi^T.
Measurement phi_phi_t_diag(const ShiftedMaskStack& phi);

/// z0 = Phi^T (y / (D + eps)).
HsiCube initialize_estimate(const Measurement& y, const ShiftedMaskStack& phi);

/// x = z + F * Phi^T((y - Phi z) / (D + eps)) with a per-voxel step field F.
HsiCube data_step(const HsiCube& z, const Measurement& y, const ShiftedMaskStack& phi, const Tensor& step_field);

/// Exact proximal update argmin ||y - Phi x||^2 + mu ||z - x||^2, i.e.
/// x = z + Phi^T((y - Phi z) / (D + mu)).
HsiCube exact_hqs_data_step(const HsiCube& z, const Measurement& y, const ShiftedMaskStack& phi, real mu);

}  // namespace hsirecon::cassi
