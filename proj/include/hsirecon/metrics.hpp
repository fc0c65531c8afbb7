#pragma once

#include <vector>

#include "hsirecon/tensor.hpp"

namespace hsirecon::metrics {

inline constexpr real kPsnrCap = 100.0;

/// Mean over bands of 10 log10(peak^2 / MSE_b); each band is capped at 100 dB.
/// Accepts H x W x B tensors.
real psnr(const Tensor& ref, const Tensor& est, real peak = 1.0);

struct SsimOptions {
    int window = 11;
    real sigma = 1.5;
    real k1 = 0.01;
    real k2 = 0.03;
    real peak = 1.0;
};

/// Normalized 1-D Gaussian taps of the SSIM window.
std::vector<real> gaussian_window(int size, real sigma);

/// Single-scale SSIM of one band (channel `band` of an H x W x B tensor),
/// averaged over every fully contained window position.
real ssim_band(const Tensor& ref, const Tensor& est, int band, const SsimOptions& opts = {});

/// Band-averaged SSIM.
real ssim(const Tensor& ref, const Tensor& est, const SsimOptions& opts = {});

}  // namespace hsirecon::metrics
