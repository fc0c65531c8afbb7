#pragma once

// Non-local spectral transformer prior: windowed channel attention over
// L x L spatial cubes, transformer blocks built on it, and the U-shaped
// denoiser whose encoder consumes the previous stage's features through
// Fourier stage fusion.

#include <optional>
#include <string>
#include <vector>

#include "hsirecon/autodiff.hpp"
#include "hsirecon/fourier.hpp"
#include "hsirecon/layers.hpp"

namespace hsirecon::nst {

/// Non-overlapping L x L tiles of a reflect-padded map, row-major.
struct CubePartition {
    int cube = 0;
    int height = 0;  // original extent
    int width = 0;
    int padded_height = 0;
    int padded_width = 0;
    int channels = 0;
    std::vector<Tensor> cubes;  // each L x L x C
};

/// Mirror index without edge repetition; folds repeatedly for pads wider
/// than the extent.
int reflect_index(int i, int n);

CubePartition partition_cubes(const Tensor& map, int cube);
Tensor merge_cubes(const CubePartition& p);

/// Cyclic roll: out[i][j] = in[(i - dy) mod H][(j - dx) mod W].
ad::Var spatial_shift(const ad::Var& map, int dy, int dx);
Tensor spatial_shift(const Tensor& map, int dy, int dx);

/// Reflect-pads to (ph, pw) / crops back to (h, w).
ad::Var reflect_pad(const ad::Var& map, int ph, int pw);
ad::Var crop(const ad::Var& map, int h, int w);
/// Nearest-neighbour 2x upsampling cropped to (h, w).
ad::Var upsample_nearest(const ad::Var& map, int h, int w);

struct NstBlockParams {
    ad::Var ln1_gamma, ln1_beta;
    nn::ConvParams query, key, value;  // 1x1, no bias
    ad::Var beta_raw;                  // one per head; temperature = softplus(beta_raw)
    nn::ConvParams proj;               // 1x1
    ad::Var ln2_gamma, ln2_beta;
    nn::ConvParams ffn_in, ffn_out;    // 1x1, C -> eC -> C
    int heads = 1;
    int cube = 8;
};

struct BlockShape {
    int channels = 16;
    int heads = 1;
    int cube = 8;
    int ffn_expand = 2;
};

/// `zero_residual` zero-initializes the value/output/FFN maps so the block
/// starts as the identity.
NstBlockParams make_nst_block(ad::ParamStore& store, const std::string& name, BlockShape shape, nn::Rng& rng,
                              bool zero_residual = false);

/// Q/K/V projection, windowed attention with per-head temperature, output
/// projection. Maps whose extent is not a multiple of the cube size are
/// reflect-padded for the attention and cropped afterwards.
ad::Var nonlocal_spectral_attention(const ad::Var& map, const NstBlockParams& p);

/// Pointwise expand, GELU, project back.
ad::Var feed_forward(const ad::Var& map, const NstBlockParams& p);

/// map + NSA(LN(map)), then + FFN(LN(.)); `shifted` rolls by half a cube
/// before and unrolls after.
ad::Var nst_block(const ad::Var& map, const NstBlockParams& p, bool shifted);

struct DenoiserShape {
    int bands = 28;
    int channels = 16;
    int levels = 2;
    int cube = 8;
    int head_dim = 16;
    int ffn_expand = 2;
    bool fusion = false;  // stage > 1: encoder levels fuse previous-stage features
};

struct NstPair {
    NstBlockParams plain;
    NstBlockParams shifted;
};

struct DenoiserParams {
    DenoiserShape shape;
    nn::ConvParams input;                                  // 3x3, B -> C
    std::vector<std::optional<fourier::FusionParams>> fusion;  // per encoder level
    std::vector<NstPair> encoder;
    std::vector<nn::ConvParams> down;                      // 3x3 stride 2, C_l -> 2C_l
    NstPair bottleneck;
    std::vector<nn::ConvParams> up;                        // nearest + 3x3, C_{l+1} -> C_l
    std::vector<nn::ConvParams> merge;                     // 1x1 skip merge, 2C_l -> C_l
    std::vector<NstPair> decoder;
    nn::ConvParams output;                                 // 3x3, C -> B
};

DenoiserParams make_denoiser(ad::ParamStore& store, const std::string& name, DenoiserShape shape, nn::Rng& rng,
                             nn::Init init = nn::Init::uniform_fan_in);

/// Per-level features handed from one stage to the next.
struct StageFeatures {
    std::vector<ad::Var> enc;
    std::vector<ad::Var> dec;

    bool empty() const { return enc.empty() && dec.empty(); }
};

struct DenoiserOutput {
    ad::Var z;
    StageFeatures features;
};

/// x: H x W x B. `prev` is empty at the first stage (fusion bypassed).
DenoiserOutput run_denoiser(const ad::Var& x, const StageFeatures& prev, const DenoiserParams& params);

}  // namespace hsirecon::nst
