#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hsirecon/autodiff.hpp"
#include "hsirecon/kernels.hpp"

namespace hsirecon::nn {

/// Seeded source for parameter initialization. Uses the raw 64-bit engine
/// output so values do not depend on the standard library's distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    real uniform() { return static_cast<real>(engine_() >> 11) * 0x1.0p-53; }
    real uniform(real lo, real hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

enum class Init { uniform_fan_in, zeros };

/// Convolution weights K x K x Cin x Cout with bias Cout.
struct ConvParams {
    ad::Var weight;
    ad::Var bias;
    kernels::ConvSpec spec;

    int in_channels() const { return weight.value().dim(2); }
    int out_channels() const { return weight.value().dim(3); }
};

/// Registers `<name>.w` and `<name>.b`. Uniform(+-1/sqrt(fan_in)) init.
ConvParams make_conv(ad::ParamStore& store, const std::string& name, int kernel, int cin, int cout, Rng& rng,
                     Init init = Init::uniform_fan_in, int stride = 1);
/// Registers `<name>.w` only; the bias is a constant zero.
ConvParams make_conv_no_bias(ad::ParamStore& store, const std::string& name, int kernel, int cin, int cout,
                             Rng& rng, Init init = Init::uniform_fan_in);

ad::Var apply(const ConvParams& conv, const ad::Var& x);

/// Fills a tensor with Uniform(+-bound).
Tensor uniform_tensor(std::vector<int> shape, real bound, Rng& rng);

}  // namespace hsirecon::nn
