#include "hsirecon/layers.hpp"

#include <cmath>

#include "hsirecon/ops.hpp"

namespace hsirecon::nn {

Tensor uniform_tensor(std::vector<int> shape, real bound, Rng& rng)
{
    Tensor t(std::move(shape));
    for (auto& v : t.vec()) v = rng.uniform(-bound, bound);
    return t;
}

ConvParams make_conv(ad::ParamStore& store, const std::string& name, int kernel, int cin, int cout, Rng& rng,
                     Init init, int stride)
{
    const real bound = 1.0 / std::sqrt(static_cast<real>(kernel * kernel * cin));
    Tensor w = init == Init::zeros ? Tensor({kernel, kernel, cin, cout}) : uniform_tensor({kernel, kernel, cin, cout}, bound, rng);
    Tensor b = init == Init::zeros ? Tensor({cout}) : uniform_tensor({cout}, bound, rng);
    ConvParams p;
    p.weight = store.add(name + ".w", std::move(w));
    p.bias = store.add(name + ".b", std::move(b));
    p.spec = {kernel, stride, kernel / 2};
    return p;
}

ConvParams make_conv_no_bias(ad::ParamStore& store, const std::string& name, int kernel, int cin, int cout,
                             Rng& rng, Init init)
{
    const real bound = 1.0 / std::sqrt(static_cast<real>(kernel * kernel * cin));
    Tensor w = init == Init::zeros ? Tensor({kernel, kernel, cin, cout}) : uniform_tensor({kernel, kernel, cin, cout}, bound, rng);
    ConvParams p;
    p.weight = store.add(name + ".w", std::move(w));
    p.bias = ad::Var::constant(Tensor({cout}));
    p.spec = {kernel, 1, kernel / 2};
    return p;
}

ad::Var apply(const ConvParams& conv, const ad::Var& x) { return ad::conv2d(x, conv.weight, conv.bias, conv.spec); }

}  // namespace hsirecon::nn
