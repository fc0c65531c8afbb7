#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

#include "hsirecon/cassi.hpp"
#include "hsirecon/tensor.hpp"

namespace testing_support {

using hsirecon::real;
using hsirecon::Tensor;

inline Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, real lo = -1.0, real hi = 1.0)
{
    Tensor t(std::move(shape));
    std::uniform_real_distribution<real> u(lo, hi);
    for (auto& v : t.vec()) v = u(rng);
    return t;
}

inline hsirecon::cassi::ShiftedMaskStack random_phi(int h, int w, int b, int step, std::mt19937_64& rng,
                                                    bool binary = true)
{
    Tensor m({h, w, 1});
    std::uniform_real_distribution<real> u(0.0, 1.0);
    for (auto& v : m.vec()) v = binary ? (u(rng) < 0.5 ? 0.0 : 1.0) : u(rng);
    return hsirecon::cassi::build_shifted_mask(hsirecon::cassi::CodedAperture(m), b, {step});
}

/// Band-0 pattern of a shared-mask stack, H x W x 1.
inline Tensor mask_of(const hsirecon::cassi::ShiftedMaskStack& phi)
{
    const Tensor u = phi.unshifted();
    Tensor m({u.h(), u.w(), 1});
    for (int i = 0; i < u.h(); ++i)
        for (int j = 0; j < u.w(); ++j) m.at(i, j, 0) = u.at(i, j, 0);
    return m;
}

/// Explicit sensing matrix: rows index (h, w') of the measurement, columns
/// index (h, w, b) of the cube, both row-major.
inline Eigen::MatrixXd dense_phi(const Tensor& mask2d, int bands, int step)
{
    const int h = mask2d.h(), w = mask2d.w(), ws = w + step * (bands - 1);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(h * ws, h * w * bands);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int b = 0; b < bands; ++b) M(i * ws + j + step * b, (i * w + j) * bands + b) = mask2d.at(i, j, 0);
    return M;
}

inline Eigen::VectorXd as_vector(const Tensor& t)
{
    return Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
}

inline real relative_diff(const Tensor& a, const Tensor& b)
{
    return hsirecon::max_abs_diff(a, b) / std::max(hsirecon::max_abs(b), 1e-300);
}

}  // namespace testing_support
