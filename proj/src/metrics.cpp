#include "hsirecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace hsirecon::metrics {

namespace {

void check_pair(const Tensor& ref, const Tensor& est, const char* what)
{
    if (ref.rank() != 3) throw ShapeError(std::string(what) + " expects H x W x B tensors, got " + ref.shape_str());
    require_same_shape(ref, est, what);
}

/// Valid-mode separable filtering of an H x W plane.
std::vector<real> filter_valid(const std::vector<real>& img, int h, int w, const std::vector<real>& k)
{
    const int n = static_cast<int>(k.size());
    const int oh = h - n + 1, ow = w - n + 1;
    std::vector<real> rows(static_cast<std::size_t>(h) * ow);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < ow; ++j) {
            real s = 0;
            for (int t = 0; t < n; ++t) s += k[t] * img[static_cast<std::size_t>(i) * w + j + t];
            rows[static_cast<std::size_t>(i) * ow + j] = s;
        }
    std::vector<real> out(static_cast<std::size_t>(oh) * ow);
    for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
            real s = 0;
            for (int t = 0; t < n; ++t) s += k[t] * rows[static_cast<std::size_t>(i + t) * ow + j];
            out[static_cast<std::size_t>(i) * ow + j] = s;
        }
    return out;
}

}  // namespace

real psnr(const Tensor& ref, const Tensor& est, real peak)
{
    check_pair(ref, est, "psnr");
    if (!(peak > 0)) throw std::invalid_argument("psnr peak must be positive");
    const int h = ref.h(), w = ref.w(), bands = ref.c();
    real total = 0;
    for (int b = 0; b < bands; ++b) {
        real sse = 0;
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                const real d = est.at(i, j, b) - ref.at(i, j, b);
                sse += d * d;
            }
        const real mse = sse / (static_cast<real>(h) * w);
        total += mse == 0 ? kPsnrCap : std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
    }
    return total / bands;
}

std::vector<real> gaussian_window(int size, real sigma)
{
    std::vector<real> k(static_cast<std::size_t>(size));
    const real centre = (size - 1) / 2.0;
    real sum = 0;
    for (int i = 0; i < size; ++i) {
        k[i] = std::exp(-0.5 * (i - centre) * (i - centre) / (sigma * sigma));
        sum += k[i];
    }
    for (real& v : k) v /= sum;
    return k;
}

real ssim_band(const Tensor& ref, const Tensor& est, int band, const SsimOptions& opts)
{
    check_pair(ref, est, "ssim");
    const int h = ref.h(), w = ref.w();
    if (h < opts.window || w < opts.window)
        throw ShapeError("ssim needs bands of at least " + std::to_string(opts.window) + "x" + std::to_string(opts.window) +
                         ", got " + ref.shape_str());
    if (band < 0 || band >= ref.c()) throw std::out_of_range("ssim band index out of range");

    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<real> x(n), y(n), xx(n), yy(n), xy(n);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const std::size_t p = static_cast<std::size_t>(i) * w + j;
            x[p] = ref.at(i, j, band);
            y[p] = est.at(i, j, band);
            xx[p] = x[p] * x[p];
            yy[p] = y[p] * y[p];
            xy[p] = x[p] * y[p];
        }
    const auto k = gaussian_window(opts.window, opts.sigma);
    const auto mx = filter_valid(x, h, w, k), my = filter_valid(y, h, w, k);
    const auto sxx = filter_valid(xx, h, w, k), syy = filter_valid(yy, h, w, k), sxy = filter_valid(xy, h, w, k);

    const real c1 = (opts.k1 * opts.peak) * (opts.k1 * opts.peak);
    const real c2 = (opts.k2 * opts.peak) * (opts.k2 * opts.peak);
    real total = 0;
    for (std::size_t p = 0; p < mx.size(); ++p) {
        const real vx = sxx[p] - mx[p] * mx[p];
        const real vy = syy[p] - my[p] * my[p];
        const real cov = sxy[p] - mx[p] * my[p];
        total += ((2 * mx[p] * my[p] + c1) * (2 * cov + c2)) / ((mx[p] * mx[p] + my[p] * my[p] + c1) * (vx + vy + c2));
    }
    return total / static_cast<real>(mx.size());
}

real ssim(const Tensor& ref, const Tensor& est, const SsimOptions& opts)
{
    check_pair(ref, est, "ssim");
    real total = 0;
    for (int b = 0; b < ref.c(); ++b) total += ssim_band(ref, est, b, opts);
    return total / ref.c();
}

}  // namespace hsirecon::metrics
