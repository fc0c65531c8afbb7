#include "hsirecon/unfolding.hpp"

#include "hsirecon/ops.hpp"

namespace hsirecon::unfolding {

void UnfoldingConfig::validate() const
{
    if (stages < 1) throw std::invalid_argument("stage count must be at least 1");
    if (channels < 1) throw std::invalid_argument("channel count must be at least 1");
    if (cube_size < 1) throw std::invalid_argument("cube size must be at least 1");
    if (levels < 1) throw std::invalid_argument("level count must be at least 1");
    if (head_dim < 0) throw std::invalid_argument("head dimension must be non-negative");
    if (ca_reduction < 1) throw std::invalid_argument("channel attention reduction must be at least 1");
    if (!(mu > 0)) throw std::invalid_argument("mu must be positive");
}

ad::Var channel_attention(const ad::Var& f, const ChannelAttentionParams& p)
{
    const int C = p.squeeze.value().dim(2);
    if (f.value().rank() != 3 || f.value().c() != C)
        throw ShapeError("channel attention for " + std::to_string(C) + " channels applied to " + f.value().shape_str());
    const int hidden = p.squeeze.value().dim(3);
    const ad::Var no_bias_hidden = ad::Var::constant(Tensor({hidden}));
    const ad::Var no_bias_out = ad::Var::constant(Tensor({C}));
    ad::Var s = ad::global_avg_pool(f);
    s = ad::relu(ad::conv2d(s, p.squeeze, no_bias_hidden, {1, 1, 0}));
    ad::Var gate = ad::sigmoid(ad::conv2d(s, p.excite, no_bias_out, {1, 1, 0}));
    return ad::scale_channels(f, gate);
}

SceneOperator SceneOperator::make(const cassi::Measurement& y, const cassi::ShiftedMaskStack& phi)
{
    if (y.height() != phi.height() || y.width() != phi.shifted_width())
        throw ShapeError("measurement " + y.values().shape_str() + " does not match sensing operator " +
                         phi.weights().shape_str());
    SceneOperator op;
    op.phi = std::make_shared<const Tensor>(phi.weights());
    Tensor diag = cassi::phi_phi_t_diag(phi).values();
    Tensor inv = diag;
    for (auto& v : inv.vec()) v = 1.0 / (v + cassi::kDiagGuard);
    op.diag = std::make_shared<const Tensor>(std::move(diag));
    op.inv_diag = std::make_shared<const Tensor>(std::move(inv));
    op.mask_cube = ad::Var::constant(phi.unshifted());
    op.measurement = ad::Var::constant(y.values());
    op.step = phi.rule().step;
    op.bands = phi.bands();
    return op;
}

ad::Var estimate_pixel_step(const ad::Var& z, const SceneOperator& op, const PixelStepParams& p)
{
    ad::Var f = nn::apply(p.conv, ad::concat_channels(z, op.mask_cube));
    return ad::scale(ad::sigmoid(channel_attention(f, p.attention)), 2.0);
}

ad::Var data_step(const ad::Var& z, const SceneOperator& op, const ad::Var& step_field)
{
    ad::Var r = ad::sub(op.measurement, ad::cassi_project(z, op.phi, op.step));
    ad::Var corr = ad::cassi_back_project(ad::mul_const(r, op.inv_diag), op.phi, op.step);
    return ad::add(z, ad::mul(step_field, corr));
}

ad::Var exact_hqs_data_step(const ad::Var& z, const SceneOperator& op, real mu)
{
    if (!(mu > 0)) throw std::invalid_argument("HQS penalty mu must be positive");
    Tensor inv = *op.diag;
    for (auto& v : inv.vec()) v = 1.0 / (v + mu);
    ad::Var r = ad::sub(op.measurement, ad::cassi_project(z, op.phi, op.step));
    ad::Var corr = ad::cassi_back_project(ad::mul_const(r, std::make_shared<const Tensor>(std::move(inv))), op.phi, op.step);
    return ad::add(z, corr);
}

UnfoldingModel::UnfoldingModel(UnfoldingConfig cfg, int bands, std::uint64_t seed, nn::Init init)
    : cfg_(cfg), bands_(bands)
{
    cfg_.validate();
    if (bands < 1) throw std::invalid_argument("band count must be at least 1");
    nn::Rng rng(seed);
    const int hidden = std::max(1, bands / cfg_.ca_reduction);
    for (int k = 0; k < cfg_.stages; ++k) {
        const std::string name = "stage" + std::to_string(k);
        StageParams sp;
        sp.step.conv = nn::make_conv(store_, name + ".step.conv", 3, 2 * bands, bands, rng, init);
        const real b1 = 1.0 / std::sqrt(static_cast<real>(bands)), b2 = 1.0 / std::sqrt(static_cast<real>(hidden));
        const bool zero = init == nn::Init::zeros;
        sp.step.attention.squeeze = store_.add(name + ".step.ca.w1", zero ? Tensor({1, 1, bands, hidden}) : nn::uniform_tensor({1, 1, bands, hidden}, b1, rng));
        sp.step.attention.excite = store_.add(name + ".step.ca.w2", zero ? Tensor({1, 1, hidden, bands}) : nn::uniform_tensor({1, 1, hidden, bands}, b2, rng));
        nst::DenoiserShape shape;
        shape.bands = bands;
        shape.channels = cfg_.channels;
        shape.levels = cfg_.levels;
        shape.cube = cfg_.cube_size;
        shape.head_dim = cfg_.head_dim > 0 ? cfg_.head_dim : cfg_.channels;
        shape.fusion = k > 0;
        sp.denoiser = nst::make_denoiser(store_, name + ".den", shape, rng, init);
        stages_.push_back(std::move(sp));
    }
}

std::vector<StageState> UnfoldingModel::forward_stages(const SceneOperator& op) const
{
    if (op.bands != bands_)
        throw ShapeError("model built for " + std::to_string(bands_) + " bands, scene has " + std::to_string(op.bands));
    std::vector<StageState> states;
    StageState s;
    // z0: diagonally preconditioned back-projection
    s.z = ad::cassi_back_project(ad::mul_const(op.measurement, op.inv_diag), op.phi, op.step);
    states.push_back(s);
    for (const StageParams& sp : stages_) {
        const StageState& prev = states.back();
        ad::Var x = cfg_.exact_hqs_mode ? exact_hqs_data_step(prev.z, op, cfg_.mu)
                                        : data_step(prev.z, op, estimate_pixel_step(prev.z, op, sp.step));
        nst::DenoiserOutput d = nst::run_denoiser(x, prev.features, sp.denoiser);
        states.push_back({d.z, std::move(d.features)});
    }
    return states;
}

ad::Var UnfoldingModel::forward(const SceneOperator& op) const { return forward_stages(op).back().z; }

cassi::HsiCube run_stages(const cassi::Measurement& y, const cassi::ShiftedMaskStack& phi, const UnfoldingModel& model)
{
    ad::NoGradGuard guard;
    return cassi::HsiCube(model.forward(SceneOperator::make(y, phi)).value());
}

}  // namespace hsirecon::unfolding
