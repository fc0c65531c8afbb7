#pragma once

// K-stage half-quadratic-splitting unfolding: each stage runs a physics data
// step with a learned per-voxel step field, then the NST denoiser.

#include <memory>
#include <string>
#include <vector>

#include "hsirecon/autodiff.hpp"
#include "hsirecon/cassi.hpp"
#include "hsirecon/layers.hpp"
#include "hsirecon/nst.hpp"

namespace hsirecon::unfolding {

struct UnfoldingConfig {
    int stages = 2;
    int channels = 16;
    int cube_size = 8;
    int levels = 2;
    int head_dim = 0;  // 0: equal to `channels`
    int ca_reduction = 4;
    bool exact_hqs_mode = false;
    real mu = 1.0;  // exact mode only

    void validate() const;
};

/// Squeeze-and-excitation gate: two bias-free dense maps C -> C/r -> C.
struct ChannelAttentionParams {
    ad::Var squeeze;  // 1 x 1 x C x C/r
    ad::Var excite;   // 1 x 1 x C/r x C
};

/// out[h,w,c] = f[h,w,c] * sigmoid(W2 relu(W1 mean_hw(f)))[c]
ad::Var channel_attention(const ad::Var& f, const ChannelAttentionParams& p);

struct PixelStepParams {
    nn::ConvParams conv;  // 3x3, 2B -> B
    ChannelAttentionParams attention;
};

/// Constant per-scene operands shared by every stage.
struct SceneOperator {
    std::shared_ptr<const Tensor> phi;        // shifted mask stack
    std::shared_ptr<const Tensor> diag;       // D = diag(Phi Phi^T)
    std::shared_ptr<const Tensor> inv_diag;   // 1 / (D + eps)
    ad::Var mask_cube;                        // phi moved back to the cube frame
    ad::Var measurement;
    int step = 1;
    int bands = 1;

    static SceneOperator make(const cassi::Measurement& y, const cassi::ShiftedMaskStack& phi);
};

/// F = 2 sigmoid(CA(Conv(Concat[z, unshifted phi]))), values in (0, 2).
ad::Var estimate_pixel_step(const ad::Var& z, const SceneOperator& op, const PixelStepParams& p);

/// x = z + F * Phi^T((y - Phi z) / (D + eps))
ad::Var data_step(const ad::Var& z, const SceneOperator& op, const ad::Var& step_field);

/// x = z + Phi^T((y - Phi z) / (D + mu))
ad::Var exact_hqs_data_step(const ad::Var& z, const SceneOperator& op, real mu);

struct StageParams {
    PixelStepParams step;
    nst::DenoiserParams denoiser;
};

struct StageState {
    ad::Var z;
    nst::StageFeatures features;
};

/// Parameters of all K stages (independent per stage) plus their config.
class UnfoldingModel {
public:
    /// `init == zeros` yields identity denoisers (output = data step).
    UnfoldingModel(UnfoldingConfig cfg, int bands, std::uint64_t seed, nn::Init init = nn::Init::uniform_fan_in);
    UnfoldingModel(const UnfoldingModel&) = delete;
    UnfoldingModel& operator=(const UnfoldingModel&) = delete;
    UnfoldingModel(UnfoldingModel&&) = default;

    const UnfoldingConfig& config() const { return cfg_; }
    int bands() const { return bands_; }
    ad::ParamStore& params() { return store_; }
    const ad::ParamStore& params() const { return store_; }
    const std::vector<StageParams>& stages() const { return stages_; }

    /// Differentiable forward; returns z^K.
    ad::Var forward(const SceneOperator& op) const;
    /// Same, recording every intermediate stage state.
    std::vector<StageState> forward_stages(const SceneOperator& op) const;

private:
    UnfoldingConfig cfg_;
    int bands_;
    ad::ParamStore store_;
    std::vector<StageParams> stages_;
};

/// Inference entry point (no gradient graph).
cassi::HsiCube run_stages(const cassi::Measurement& y, const cassi::ShiftedMaskStack& phi, const UnfoldingModel& model);

}  // namespace hsirecon::unfolding
