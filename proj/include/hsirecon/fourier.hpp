#pragma once

// Orthonormal 2-D Fourier transforms over the spatial axes of H x W x C maps,
// polar (amplitude/phase) decomposition, and the cross-stage fusion that
// recombines one feature's amplitude with another's phase.

#include <stdexcept>

#include "hsirecon/autodiff.hpp"
#include "hsirecon/tensor.hpp"

namespace hsirecon::fourier {

/// Raised when an inverse transform that should be real carries an
/// imaginary residue above tolerance.
class TransformError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// H x W x C complex values stored as separate real and imaginary tensors.
/// Transforms here always use the unitary 1/sqrt(HW) scaling.
struct Spectrum {
    Tensor re;
    Tensor im;
    bool orthonormal = true;

    int h() const { return re.h(); }
    int w() const { return re.w(); }
    int c() const { return re.c(); }
};

struct AmplitudePhase {
    Tensor amplitude;  // >= 0
    Tensor phase;      // (-pi, pi]
};

/// Residual imaginary part tolerated when a recombined spectrum is inverted.
inline constexpr real kImagTolerance = 1e-6;
/// Added to squared magnitudes in the sqrt/atan2 derivatives.
inline constexpr real kPolarGuard = 1e-12;

Spectrum fft2(const Tensor& map);
Spectrum fft2(const Spectrum& s);
Spectrum ifft2(const Spectrum& s);
/// ifft2 followed by a check that max |imag| <= tol; returns the real part.
Tensor ifft2_real(const Spectrum& s, real tol = kImagTolerance);

Tensor amplitude(const Spectrum& s);
Tensor phase(const Spectrum& s);
AmplitudePhase decompose(const Spectrum& s);
/// re = A cos P, im = A sin P. Negative amplitudes are rejected.
Spectrum compose_from_amplitude_phase(const Tensor& amp, const Tensor& phase);

/// F' = ifft2(compose(A(fft2(enc_prev)), P(fft2(dec_prev)))), differentiable
/// in both inputs.
ad::Var amplitude_phase_mix(const ad::Var& enc_prev, const ad::Var& dec_prev);

/// 3x3 convolution merging [F', current encoder feature] (2C -> C channels).
struct FusionParams {
    ad::Var weight;
    ad::Var bias;
};

ad::Var fft_stage_fusion(const ad::Var& enc_prev, const ad::Var& dec_prev, const ad::Var& enc_curr,
                         const FusionParams& params);

}  // namespace hsirecon::fourier
