#include <benchmark/benchmark.h>

#include <random>

#include "hsirecon/kernels.hpp"

using namespace hsirecon;
namespace k = hsirecon::kernels;

namespace {

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed)
{
    Tensor t(std::move(shape));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<real> u(-1.0, 1.0);
    for (auto& v : t.vec()) v = u(rng);
    return t;
}

template <bool Parallel>
void conv_forward(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const Tensor in = random_tensor({n, n, 16}, 1), w = random_tensor({3, 3, 16, 16}, 2), b = random_tensor({16}, 3);
    for (auto _ : state) {
        Tensor out = Parallel ? k::parallel::conv2d_forward(in, w, b, {3, 1, 1}) : k::serial::conv2d_forward(in, w, b, {3, 1, 1});
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * n * n * 16 * 16 * 9);
}

template <bool Parallel>
void conv_backward(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const Tensor in = random_tensor({n, n, 16}, 1), w = random_tensor({3, 3, 16, 16}, 2), g = random_tensor({n, n, 16}, 4);
    Tensor gw = Tensor::zeros_like(w), gb({16});
    for (auto _ : state) {
        if constexpr (Parallel) {
            benchmark::DoNotOptimize(k::parallel::conv2d_backward_input(g, w, n, n, {3, 1, 1}).data());
            k::parallel::conv2d_backward_params(g, in, {3, 1, 1}, gw, gb);
        } else {
            benchmark::DoNotOptimize(k::serial::conv2d_backward_input(g, w, n, n, {3, 1, 1}).data());
            k::serial::conv2d_backward_params(g, in, {3, 1, 1}, gw, gb);
        }
    }
}

template <bool Parallel>
void cassi_round_trip(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0)), bands = 28;
    const Tensor x = random_tensor({n, n, bands}, 5), phi = random_tensor({n, n + bands - 1, bands}, 6);
    for (auto _ : state) {
        const Tensor y = Parallel ? k::parallel::cassi_forward(x, phi, 1) : k::serial::cassi_forward(x, phi, 1);
        const Tensor back = Parallel ? k::parallel::cassi_adjoint(y, phi, 1) : k::serial::cassi_adjoint(y, phi, 1);
        benchmark::DoNotOptimize(back.data());
    }
}

template <bool Parallel>
void attention(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const Tensor q = random_tensor({n, n, 32}, 7), kk = random_tensor({n, n, 32}, 8), v = random_tensor({n, n, 32}, 9);
    const std::vector<real> beta{1.0, 1.0};
    const k::AttentionSpec spec{8, 2};
    std::vector<real> attn;
    for (auto _ : state) {
        Tensor out = Parallel ? k::parallel::cube_attention_forward(q, kk, v, beta, spec, &attn)
                              : k::serial::cube_attention_forward(q, kk, v, beta, spec, &attn);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(conv_forward<false>)->Name("conv_forward/serial")->Arg(32)->Arg(64);
BENCHMARK(conv_forward<true>)->Name("conv_forward/parallel")->Arg(32)->Arg(64);
BENCHMARK(conv_backward<false>)->Name("conv_backward/serial")->Arg(32)->Arg(64);
BENCHMARK(conv_backward<true>)->Name("conv_backward/parallel")->Arg(32)->Arg(64);
BENCHMARK(cassi_round_trip<false>)->Name("cassi_round_trip/serial")->Arg(64)->Arg(128);
BENCHMARK(cassi_round_trip<true>)->Name("cassi_round_trip/parallel")->Arg(64)->Arg(128);
BENCHMARK(attention<false>)->Name("attention/serial")->Arg(32)->Arg(64);
BENCHMARK(attention<true>)->Name("attention/parallel")->Arg(32)->Arg(64);

BENCHMARK_MAIN();
