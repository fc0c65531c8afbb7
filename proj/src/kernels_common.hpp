#pragma once

#include <cmath>
#include <string>

#include "hsirecon/kernels.hpp"

namespace hsirecon::kernels::detail {

inline void check_conv(const Tensor& in, const Tensor& weight, const Tensor& bias, ConvSpec spec)
{
    if (in.rank() != 3 || weight.rank() != 4 || bias.rank() != 1)
        throw ShapeError("conv2d expects a rank-3 map, rank-4 weight and rank-1 bias");
    if (weight.dim(0) != spec.kernel || weight.dim(1) != spec.kernel)
        throw ShapeError("conv2d weight " + weight.shape_str() + " does not match kernel size " + std::to_string(spec.kernel));
    if (weight.dim(2) != in.c())
        throw ShapeError("conv2d input " + in.shape_str() + " does not match weight " + weight.shape_str());
    if (bias.dim(0) != weight.dim(3))
        throw ShapeError("conv2d bias " + bias.shape_str() + " does not match weight " + weight.shape_str());
    if (spec.out_extent(in.h()) < 1 || spec.out_extent(in.w()) < 1)
        throw ShapeError("conv2d input " + in.shape_str() + " too small for kernel");
}

inline void check_cassi(const Tensor& cube, const Tensor& phi, int step)
{
    if (cube.rank() != 3 || phi.rank() != 3) throw ShapeError("cassi operator expects rank-3 cube and mask stack");
    const int ws = cube.w() + step * (cube.c() - 1);
    if (phi.h() != cube.h() || phi.w() != ws || phi.c() != cube.c())
        throw ShapeError("cube " + cube.shape_str() + " does not match shifted mask stack " + phi.shape_str());
}

inline void check_cassi_meas(const Tensor& meas, const Tensor& phi)
{
    if (meas.rank() != 3 || meas.c() != 1 || meas.h() != phi.h() || meas.w() != phi.w())
        throw ShapeError("measurement " + meas.shape_str() + " does not match shifted mask stack " + phi.shape_str());
}

inline void check_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::span<const real> beta,
                            AttentionSpec spec)
{
    require_same_shape(q, k, "attention key");
    require_same_shape(q, v, "attention value");
    if (q.rank() != 3) throw ShapeError("attention expects rank-3 maps");
    if (spec.cube < 1 || q.h() % spec.cube || q.w() % spec.cube)
        throw ShapeError("attention map " + q.shape_str() + " is not tiled by cube size " + std::to_string(spec.cube));
    if (spec.heads < 1 || q.c() % spec.heads)
        throw ShapeError("channels " + std::to_string(q.c()) + " not divisible by heads " + std::to_string(spec.heads));
    if (static_cast<int>(beta.size()) != spec.heads) throw ShapeError("one temperature per head required");
}

inline std::size_t attention_map_count(const Tensor& q, AttentionSpec spec)
{
    const std::size_t d = static_cast<std::size_t>(q.c() / spec.heads);
    const std::size_t cubes = static_cast<std::size_t>(q.h() / spec.cube) * (q.w() / spec.cube);
    return cubes * spec.heads * d * d;
}

}  // namespace hsirecon::kernels::detail
