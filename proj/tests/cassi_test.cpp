#include <gtest/gtest.h>

#include <cmath>

#include "hsirecon/cassi.hpp"
#include "support.hpp"

using namespace hsirecon;
using namespace hsirecon::cassi;
using testing_support::as_vector;
using testing_support::dense_phi;
using testing_support::mask_of;
using testing_support::random_phi;
using testing_support::random_tensor;

namespace {

ShiftedMaskStack tiny_phi()
{
    Tensor m({1, 2, 1}, std::vector<real>{1.0, 0.5});
    return build_shifted_mask(CodedAperture(m), 2, {1});
}

}  // namespace

TEST(ShiftedMask, TwoBandLayout)
{
    const auto phi = tiny_phi();
    ASSERT_EQ(phi.shifted_width(), 3);
    const real band0[] = {1, 0.5, 0}, band1[] = {0, 1, 0.5};
    for (int w = 0; w < 3; ++w) {
        EXPECT_EQ(phi(0, w, 0), band0[w]);
        EXPECT_EQ(phi(0, w, 1), band1[w]);
    }
}

TEST(ShiftedMask, LayoutMatchesDenseSensingMatrix)
{
    std::mt19937_64 rng(11);
    const auto phi = random_phi(3, 4, 3, 2, rng, false);
    const auto M = dense_phi(mask_of(phi), 3, 2);
    for (int h = 0; h < 3; ++h)
        for (int w = 0; w < 4; ++w)
            for (int b = 0; b < 3; ++b)
                EXPECT_EQ(phi(h, w + 2 * b, b), M(h * phi.shifted_width() + w + 2 * b, (h * 4 + w) * 3 + b));
}

TEST(ShiftedMask, SingleBandIsTheMask)
{
    std::mt19937_64 rng(3);
    Tensor m = random_tensor({4, 5, 1}, rng, 0.0, 1.0);
    const auto phi = build_shifted_mask(CodedAperture(m), 1, {1});
    EXPECT_EQ(phi.shifted_width(), 5);
    EXPECT_EQ(phi.weights().vec(), m.vec());
}

TEST(ShiftedMask, StandardGeometryWidth)
{
    const auto phi = build_shifted_mask(CodedAperture(2, 256), 28, {1});
    EXPECT_EQ(phi.shifted_width(), 283);
}

TEST(ShiftedMask, PerBandStack)
{
    std::mt19937_64 rng(5);
    Tensor m = random_tensor({2, 3, 4}, rng, 0.0, 1.0);
    const auto phi = build_shifted_mask(CodedAperture(m), 4, {1});
    for (int h = 0; h < 2; ++h)
        for (int w = 0; w < 3; ++w)
            for (int b = 0; b < 4; ++b) EXPECT_EQ(phi(h, w + b, b), m.at(h, w, b));
    EXPECT_THROW(build_shifted_mask(CodedAperture(m), 3, {1}), ShapeError);
}

TEST(ShiftedMask, RejectsBadArguments)
{
    EXPECT_THROW(CodedAperture(2, 2, 1.5), std::invalid_argument);
    EXPECT_THROW(build_shifted_mask(CodedAperture(2, 2), 0, {1}), std::invalid_argument);
    EXPECT_THROW(build_shifted_mask(CodedAperture(2, 2), 2, {0}), std::invalid_argument);
}

TEST(Forward, TinyExample)
{
    HsiCube x(1, 2, 2);
    x(0, 0, 0) = 1;
    x(0, 1, 0) = 2;
    x(0, 0, 1) = 3;
    x(0, 1, 1) = 4;
    const auto y = forward_project(x, tiny_phi());
    EXPECT_EQ(y(0, 0), 1.0);
    EXPECT_EQ(y(0, 1), 4.0);
    EXPECT_EQ(y(0, 2), 2.0);
}

TEST(Forward, MatchesDenseMatrix)
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const int h = 2 + trial % 4, w = 3 + trial % 3, b = 1 + trial % 4, s = 1 + trial % 2;
        const auto phi = random_phi(h, w, b, s, rng, false);
        const HsiCube x(random_tensor({h, w, b}, rng));
        const Eigen::VectorXd ref = dense_phi(mask_of(phi), b, s) * as_vector(x.values());
        const auto y = forward_project(x, phi);
        EXPECT_LT((as_vector(y.values()) - ref).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Forward, IdentityAndZero)
{
    std::mt19937_64 rng(2);
    const HsiCube x(random_tensor({3, 4, 1}, rng));
    const auto phi = build_shifted_mask(CodedAperture(3, 4), 1, {1});
    EXPECT_EQ(forward_project(x, phi).values().vec(), x.values().vec());
    const auto y0 = forward_project(HsiCube(3, 4, 1), phi);
    EXPECT_EQ(max_abs(y0.values()), 0.0);
}

TEST(Forward, Linearity)
{
    std::mt19937_64 rng(8);
    const auto phi = random_phi(5, 6, 4, 1, rng, false);
    const Tensor a = random_tensor({5, 6, 4}, rng), b = random_tensor({5, 6, 4}, rng);
    const real alpha = 0.7, beta = -1.9;
    Tensor mix = a;
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * a[i] + beta * b[i];
    const auto ya = forward_project(HsiCube(a), phi), yb = forward_project(HsiCube(b), phi);
    const auto ym = forward_project(HsiCube(mix), phi);
    real worst = 0;
    for (std::size_t i = 0; i < ym.values().size(); ++i)
        worst = std::max(worst, std::abs(ym.values()[i] - (alpha * ya.values()[i] + beta * yb.values()[i])));
    EXPECT_LT(worst / max_abs(ym.values()), 1e-12);
}

TEST(Forward, GaussianNoiseIsSeeded)
{
    std::mt19937_64 rng(4);
    const auto phi = random_phi(4, 4, 2, 1, rng);
    const HsiCube x(random_tensor({4, 4, 2}, rng, 0.0, 1.0));
    const NoiseConfig n{NoiseConfig::Kind::gaussian, 0.01, 99};
    const auto a = forward_project(x, phi, n), b = forward_project(x, phi, n);
    EXPECT_EQ(a.values().vec(), b.values().vec());
    const auto clean = forward_project(x, phi);
    EXPECT_GT(max_abs_diff(a.values(), clean.values()), 0.0);
    EXPECT_THROW(forward_project(x, phi, {NoiseConfig::Kind::gaussian, -1.0, 0}), std::invalid_argument);
}

TEST(Forward, ShapeMismatch)
{
    std::mt19937_64 rng(4);
    const auto phi = random_phi(4, 4, 2, 1, rng);
    EXPECT_THROW(forward_project(HsiCube(4, 5, 2), phi), ShapeError);
    EXPECT_THROW(adjoint_project(Measurement(4, 4), phi), ShapeError);
}

TEST(Adjoint, InnerProductIdentity)
{
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
        const int h = 1 + static_cast<int>(rng() % 16), w = 1 + static_cast<int>(rng() % 16);
        const int b = 1 + static_cast<int>(rng() % 8), s = 1 + static_cast<int>(rng() % 2);
        const auto phi = random_phi(h, w, b, s, rng, false);
        const Tensor x = random_tensor({h, w, b}, rng);
        const Tensor y = random_tensor({h, phi.shifted_width(), 1}, rng);
        const real lhs = dot(forward_project(HsiCube(x), phi).values(), y);
        const real rhs = dot(x, adjoint_project(Measurement(y), phi).values());
        EXPECT_LT(std::abs(lhs - rhs) / (std::abs(lhs) + 1e-300), 1e-12) << "trial " << trial;
    }
}

TEST(Adjoint, ZeroAndIdentity)
{
    std::mt19937_64 rng(6);
    const auto phi = random_phi(3, 3, 3, 1, rng);
    EXPECT_EQ(max_abs(adjoint_project(Measurement(3, 5), phi).values()), 0.0);
    const Tensor y = random_tensor({3, 3, 1}, rng);
    const auto ones = build_shifted_mask(CodedAperture(3, 3), 1, {1});
    EXPECT_EQ(adjoint_project(Measurement(y), ones).values().vec(), y.vec());
}

TEST(Adjoint, OneHotSupport)
{
    const int h = 2, w = 5, b = 3;
    const auto phi = build_shifted_mask(CodedAperture(h, w), b, {1});
    for (int col = 0; col < phi.shifted_width(); ++col) {
        Measurement y(h, phi.shifted_width());
        y(1, col) = 1.0;
        const auto x = adjoint_project(y, phi);
        int touched = 0, valid = 0;
        for (real v : x.values().vec()) touched += v != 0.0;
        for (int band = 0; band < b; ++band) valid += col - band >= 0 && col - band < w;
        EXPECT_EQ(touched, std::min(b, valid));
    }
}

TEST(Diagonal, TinyExample)
{
    const auto d = phi_phi_t_diag(tiny_phi());
    EXPECT_EQ(d(0, 0), 1.0);
    EXPECT_EQ(d(0, 1), 1.25);
    EXPECT_EQ(d(0, 2), 0.25);
}

TEST(Diagonal, BinaryMaskCountsOverlaps)
{
    std::mt19937_64 rng(9);
    const auto phi = random_phi(4, 6, 3, 1, rng);
    const auto d = phi_phi_t_diag(phi);
    for (int h = 0; h < 4; ++h)
        for (int w = 0; w < phi.shifted_width(); ++w) {
            int count = 0;
            for (int b = 0; b < 3; ++b) count += phi(h, w, b) != 0.0;
            EXPECT_EQ(d(h, w), count);
        }
}

TEST(Diagonal, DenseGramIsDiagonal)
{
    std::mt19937_64 rng(77);
    for (int h = 2; h <= 6; ++h)
        for (int w = 2; w <= 6; ++w)
            for (int b = 1; b <= 4; ++b) {
                const auto phi = random_phi(h, w, b, 1, rng, false);
                const Eigen::MatrixXd M = dense_phi(mask_of(phi), b, 1);
                const Eigen::MatrixXd G = M * M.transpose();
                const Eigen::VectorXd diag = G.diagonal();
                const Eigen::MatrixXd off = G - Eigen::MatrixXd(diag.asDiagonal());
                EXPECT_LT(off.cwiseAbs().maxCoeff(), 1e-14);
                EXPECT_LT((diag - as_vector(phi_phi_t_diag(phi).values())).cwiseAbs().maxCoeff(), 1e-14);
            }
}

TEST(Initialize, RecoversConstantCube)
{
    HsiCube x(3, 4, 1);
    x.values().fill(0.37);
    const auto phi = build_shifted_mask(CodedAperture(3, 4), 1, {1});
    const auto z = initialize_estimate(forward_project(x, phi), phi);
    EXPECT_LT(max_abs_diff(z.values(), x.values()), 1e-6);
    EXPECT_EQ(max_abs(initialize_estimate(Measurement(3, 4), phi).values()), 0.0);
}

TEST(Initialize, FiniteWhereMaskVanishes)
{
    std::mt19937_64 rng(10);
    Tensor m({6, 6, 1});
    m.at(2, 2, 0) = 1.0;
    const auto phi = build_shifted_mask(CodedAperture(m), 4, {1});
    const Tensor y = random_tensor({6, phi.shifted_width(), 1}, rng);
    const HsiCube z0 = initialize_estimate(Measurement(y), phi);
    for (real v : z0.values().vec()) EXPECT_TRUE(std::isfinite(v));
}

TEST(DataStep, FixedPointOnConsistentInput)
{
    std::mt19937_64 rng(12);
    const auto phi = random_phi(6, 5, 4, 1, rng);
    const HsiCube z(random_tensor({6, 5, 4}, rng, 0.0, 1.0));
    const auto y = forward_project(z, phi);
    const Tensor field = random_tensor({6, 5, 4}, rng, 0.0, 2.0);
    EXPECT_EQ(data_step(z, y, phi, field).values().vec(), z.values().vec());
    EXPECT_EQ(exact_hqs_data_step(z, y, phi, 0.3).values().vec(), z.values().vec());
}

TEST(DataStep, ZeroFieldIsIdentity)
{
    std::mt19937_64 rng(13);
    const auto phi = random_phi(4, 4, 3, 1, rng);
    const HsiCube z(random_tensor({4, 4, 3}, rng));
    const Measurement y(random_tensor({4, 6, 1}, rng));
    EXPECT_EQ(data_step(z, y, phi, Tensor({4, 4, 3})).values().vec(), z.values().vec());
}

TEST(DataStep, ConstantFieldMatchesDenseFormula)
{
    std::mt19937_64 rng(14);
    const real mu = 0.5;
    for (int trial = 0; trial < 5; ++trial) {
        const auto phi = random_phi(4, 4, 3, 1, rng);
        const HsiCube z(random_tensor({4, 4, 3}, rng));
        const Measurement y(random_tensor({4, 6, 1}, rng));
        const Eigen::MatrixXd M = dense_phi(mask_of(phi), 3, 1);
        const Eigen::MatrixXd gram = M * M.transpose() + kDiagGuard * Eigen::MatrixXd::Identity(M.rows(), M.rows());
        const Eigen::VectorXd zv = as_vector(z.values());
        const Eigen::VectorXd ref =
            zv + (1.0 / (1.0 + mu)) * M.transpose() * gram.ldlt().solve(as_vector(y.values()) - M * zv);
        const auto x = data_step(z, y, phi, Tensor({4, 4, 3}, 1.0 / (1.0 + mu)));
        EXPECT_LT((as_vector(x.values()) - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(DataStep, ConstantFieldIsHqsWithRescaledPenalty)
{
    std::mt19937_64 rng(15);
    const auto phi = random_phi(4, 5, 3, 1, rng);
    const HsiCube z(random_tensor({4, 5, 3}, rng));
    const Measurement y(random_tensor({4, 7, 1}, rng));
    const real c = 0.8;
    const Eigen::MatrixXd M = dense_phi(mask_of(phi), 3, 1);
    const Eigen::VectorXd D = (M * M.transpose()).diagonal();
    const Eigen::VectorXd zv = as_vector(z.values());
    const Eigen::VectorXd r = as_vector(y.values()) - M * zv;
    const Eigen::VectorXd scaled = r.cwiseQuotient((D.array() + kDiagGuard).matrix() / c);
    const Eigen::VectorXd ref = zv + M.transpose() * scaled;
    const auto x = data_step(z, y, phi, Tensor({4, 5, 3}, c));
    EXPECT_LT((as_vector(x.values()) - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExactHqs, MatchesDenseSolve)
{
    std::mt19937_64 rng(16);
    for (real mu : {0.1, 0.5, 1.0, 10.0})
        for (int trial = 0; trial < 6; ++trial) {
            const int h = 2 + trial % 5, w = 2 + (trial * 3) % 5, b = 1 + trial % 4;
            const auto phi = random_phi(h, w, b, 1, rng, trial % 2 == 0);
            const HsiCube z(random_tensor({h, w, b}, rng));
            const Measurement y(random_tensor({h, phi.shifted_width(), 1}, rng));
            const Eigen::MatrixXd M = dense_phi(mask_of(phi), b, 1);
            const Eigen::MatrixXd A = M.transpose() * M + mu * Eigen::MatrixXd::Identity(M.cols(), M.cols());
            const Eigen::VectorXd rhs = M.transpose() * as_vector(y.values()) + mu * as_vector(z.values());
            const Eigen::VectorXd ref = A.ldlt().solve(rhs);
            const auto x = exact_hqs_data_step(z, y, phi, mu);
            EXPECT_LT((as_vector(x.values()) - ref).norm() / ref.norm(), 1e-9) << "mu " << mu;
        }
}

TEST(ExactHqs, LargePenaltyStaysAtPrior)
{
    std::mt19937_64 rng(17);
    const auto phi = random_phi(4, 4, 3, 1, rng);
    const HsiCube z(random_tensor({4, 4, 3}, rng));
    const Measurement y(random_tensor({4, 6, 1}, rng));
    const real step_unit = max_abs_diff(exact_hqs_data_step(z, y, phi, 1.0).values(), z.values());
    const real step_huge = max_abs_diff(exact_hqs_data_step(z, y, phi, 1e8).values(), z.values());
    EXPECT_LT(step_huge, 1e-6 * step_unit);
    EXPECT_THROW(exact_hqs_data_step(z, y, phi, 0.0), std::invalid_argument);
}
