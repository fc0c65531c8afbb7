#include "hsirecon/training.hpp"

#include <cmath>

#include "hsirecon/layers.hpp"
#include "hsirecon/ops.hpp"

namespace hsirecon::training {

ad::Var reconstruction_loss(const ad::Var& estimate, const Tensor& truth, LossKind kind)
{
    return kind == LossKind::mse ? ad::mse(estimate, truth) : ad::charbonnier(estimate, truth);
}

TrainResult train_toy(unfolding::UnfoldingModel& model, const cassi::HsiCube& scene, const cassi::Measurement& y,
                      const cassi::ShiftedMaskStack& phi, const TrainOptions& opts)
{
    if (scene.height() > 32 || scene.width() > 32 || scene.bands() > 8)
        throw std::invalid_argument("toy training is limited to scenes of at most 32x32x8");
    if (model.config().stages > 2 || model.config().channels > 16)
        throw std::invalid_argument("toy training is limited to K <= 2 stages and C <= 16 channels");
    if (opts.steps < 1) throw std::invalid_argument("training needs at least one step");

    const unfolding::SceneOperator op = unfolding::SceneOperator::make(y, phi);
    optim::Adam adam(model.params());
    TrainResult result;
    auto record = [&](long step, real rate, real loss) {
        if (!std::isfinite(loss)) throw DivergenceError(step, "training diverged at step " + std::to_string(step));
        result.curve.push_back({step, rate, loss});
        if (opts.on_step) opts.on_step(step, rate, loss);
    };

    for (long t = 0; t < opts.steps; ++t) {
        const real rate = optim::cosine_rate(t, opts.steps, opts.base_rate);
        model.params().zero_grad();
        ad::Var loss = reconstruction_loss(model.forward(op), scene.values(), opts.loss);
        record(t, rate, loss.value()[0]);
        ad::backward(loss);
        adam.step(rate);
    }
    model.params().zero_grad();
    {
        ad::NoGradGuard guard;
        const real loss = reconstruction_loss(model.forward(op), scene.values(), opts.loss).value()[0];
        record(opts.steps, optim::cosine_rate(opts.steps, opts.steps, opts.base_rate), loss);
    }
    return result;
}

cassi::HsiCube synthetic_scene(int height, int width, int bands, std::uint64_t seed)
{
    nn::Rng rng(seed);
    cassi::HsiCube cube(height, width, bands);
    const int blobs = 4;
    struct Blob {
        real cy, cx, radius, peak_band, spectral_width, amplitude;
    };
    std::vector<Blob> bs;
    for (int i = 0; i < blobs; ++i)
        bs.push_back({rng.uniform(0, height), rng.uniform(0, width), rng.uniform(0.15, 0.35) * std::max(height, width),
                      rng.uniform(0, bands), rng.uniform(0.3, 0.8) * bands, rng.uniform(0.3, 0.6)});
    const real background = 0.05;
    for (int h = 0; h < height; ++h)
        for (int w = 0; w < width; ++w)
            for (int b = 0; b < bands; ++b) {
                real v = background;
                for (const Blob& bl : bs) {
                    const real r2 = ((h - bl.cy) * (h - bl.cy) + (w - bl.cx) * (w - bl.cx)) / (bl.radius * bl.radius);
                    const real s2 = (b - bl.peak_band) * (b - bl.peak_band) / (bl.spectral_width * bl.spectral_width);
                    v += bl.amplitude * std::exp(-0.5 * r2) * std::exp(-0.5 * s2);
                }
                cube(h, w, b) = std::min(1.0, v);
            }
    return cube;
}

ToyProblem toy_problem(int height, int width, int bands, std::uint64_t seed, real transmission, cassi::DispersionRule rule)
{
    if (!(transmission > 0) || transmission > 1) throw std::invalid_argument("aperture transmission must lie in (0, 1]");
    Tensor weights = cassi::CodedAperture::random_binary(height, width, seed + 1).weights();
    weights *= transmission;
    cassi::HsiCube scene = synthetic_scene(height, width, bands, seed);
    cassi::ShiftedMaskStack phi = cassi::build_shifted_mask(cassi::CodedAperture(std::move(weights)), bands, rule);
    cassi::Measurement y = cassi::forward_project(scene, phi);
    return {std::move(scene), std::move(phi), std::move(y)};
}

}  // namespace hsirecon::training
