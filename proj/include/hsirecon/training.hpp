#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "hsirecon/cassi.hpp"
#include "hsirecon/optim.hpp"
#include "hsirecon/unfolding.hpp"

namespace hsirecon::training {

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(long step, const std::string& what) : std::runtime_error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

enum class LossKind { mse, charbonnier };

struct TrainOptions {
    int steps = 200;
    real base_rate = 4e-4;
    LossKind loss = LossKind::mse;
    /// Called after every recorded row (step, rate, loss).
    std::function<void(long, real, real)> on_step;
};

struct LossRecord {
    long step;
    real rate;
    real loss;
};

/// Row t holds the loss before update t at the scheduled rate for that update;
/// the final row (t = steps, rate 0) is the loss of the trained model.
struct TrainResult {
    std::vector<LossRecord> curve;

    real initial_loss() const { return curve.front().loss; }
    real final_loss() const { return curve.back().loss; }
};

ad::Var reconstruction_loss(const ad::Var& estimate, const Tensor& truth, LossKind kind);

/// Fits all stage parameters to one scene with Adam under a cosine schedule.
/// Restricted to desk-scale problems: at most 32 x 32 x 8, K <= 2, C <= 16.
TrainResult train_toy(unfolding::UnfoldingModel& model, const cassi::HsiCube& scene, const cassi::Measurement& y,
                      const cassi::ShiftedMaskStack& phi, const TrainOptions& opts = {});

/// Smooth synthetic scene in [0, 1]: Gaussian blobs with Gaussian spectra
/// over a dim background.
cassi::HsiCube synthetic_scene(int height, int width, int bands, std::uint64_t seed);

/// Scene, sensing operator and noiseless snapshot for a seeded toy run. The
/// scene uses `seed`, the binary aperture `seed + 1`; `transmission` scales
/// the aperture weights.
struct ToyProblem {
    cassi::HsiCube scene;
    cassi::ShiftedMaskStack phi;
    cassi::Measurement y;
};

ToyProblem toy_problem(int height, int width, int bands, std::uint64_t seed, real transmission = 1.0,
                       cassi::DispersionRule rule = {});

}  // namespace hsirecon::training
