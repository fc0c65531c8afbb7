#include "hsirecon/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace hsirecon::optim {

real cosine_rate(long step, long total, real base)
{
    if (total <= 0) throw std::invalid_argument("cosine schedule needs a positive step budget");
    if (!(base > 0)) throw std::invalid_argument("base rate must be positive");
    const long t = std::clamp(step, 0L, total);
    if (t == total) return 0.0;
    return base * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<real>(t) / static_cast<real>(total)));
}

Adam::Adam(ad::ParamStore& params, AdamOptions opts) : params_(params), opts_(opts)
{
    for (const auto& [name, v] : params_.entries()) {
        m_.push_back(Tensor::zeros_like(v.value()));
        v_.push_back(Tensor::zeros_like(v.value()));
    }
}

void Adam::step(real rate)
{
    const auto& entries = params_.entries();
    if (entries.size() != m_.size()) throw ShapeError("parameter store changed after optimizer construction");
    ++t_;
    const real c1 = 1.0 - std::pow(opts_.beta1, static_cast<real>(t_));
    const real c2 = 1.0 - std::pow(opts_.beta2, static_cast<real>(t_));
    for (std::size_t p = 0; p < entries.size(); ++p) {
        ad::Var param = entries[p].second;
        const Tensor& g = param.grad();
        Tensor& theta = param.mutable_value();
        if (!g.empty()) require_same_shape(theta, g, "adam gradient for " + entries[p].first);
        Tensor& m = m_[p];
        Tensor& v = v_[p];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const real gi = g.empty() ? 0.0 : g[i];
            m[i] = opts_.beta1 * m[i] + (1 - opts_.beta1) * gi;
            v[i] = opts_.beta2 * v[i] + (1 - opts_.beta2) * gi * gi;
            theta[i] -= rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + opts_.eps);
        }
    }
}

real relative_error(real analytic, real numeric)
{
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

real GradCheckReport::worst() const
{
    real w = 0;
    for (const auto& g : groups) w = std::max(w, g.max_rel_error);
    return w;
}

const GroupCheck* GradCheckReport::first_failure() const
{
    for (const auto& g : groups)
        if (!g.pass) return &g;
    return nullptr;
}

GradCheckReport grad_check(ad::ParamStore& params, const std::function<ad::Var()>& loss, const GradCheckOptions& opts)
{
    if (!opts.corrupt_group.empty() && !params.contains(opts.corrupt_group))
        throw std::invalid_argument("no parameter group named " + opts.corrupt_group);
    params.zero_grad();
    ad::backward(loss());

    std::mt19937_64 rng(opts.seed);
    auto evaluate = [&]() {
        ad::NoGradGuard guard;
        return loss().value()[0];
    };

    GradCheckReport report;
    for (const auto& [name, var] : params.entries()) {
        ad::Var param = var;
        GroupCheck gc;
        gc.name = name;
        Tensor analytic = param.grad().empty() ? Tensor::zeros_like(param.value()) : param.grad();
        if (name == opts.corrupt_group)
            for (auto& g : analytic.vec()) g = 2.0 * g + 1e-3;

        const std::size_t n = analytic.size();
        std::vector<std::size_t> coords;
        if (static_cast<int>(n) <= opts.samples_per_group) {
            for (std::size_t i = 0; i < n; ++i) coords.push_back(i);
        } else {
            for (int s = 0; s < opts.samples_per_group; ++s) coords.push_back(static_cast<std::size_t>(rng() % n));
            std::size_t best = 0;
            for (std::size_t i = 1; i < n; ++i)
                if (std::abs(analytic[i]) > std::abs(analytic[best])) best = i;
            coords.push_back(best);
        }

        for (std::size_t i : coords) {
            Tensor& theta = param.mutable_value();
            const real orig = theta[i];
            const real h = 1e-5 * std::max(1.0, std::abs(orig));
            theta[i] = orig + h;
            const real up = evaluate();
            theta[i] = orig - h;
            const real down = evaluate();
            theta[i] = orig;
            const real numeric = (up - down) / (2 * h);
            ++gc.checked;
            if (!std::isfinite(numeric) || !std::isfinite(analytic[i])) {
                gc.pass = false;
                gc.max_rel_error = std::numeric_limits<real>::infinity();
                gc.argmax = i;
                gc.problem = "non-finite gradient at index " + std::to_string(i);
                break;
            }
            const real err = relative_error(analytic[i], numeric);
            if (err >= gc.max_rel_error) {
                gc.max_rel_error = err;
                gc.argmax = i;
            }
        }
        if (gc.max_rel_error > opts.tolerance) gc.pass = false;
        report.pass = report.pass && gc.pass;
        report.groups.push_back(std::move(gc));
    }
    params.zero_grad();
    return report;
}

}  // namespace hsirecon::optim
