#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hsirecon/autodiff.hpp"

namespace hsirecon::optim {

/// rate(t) = base * (1 + cos(pi * t / total)) / 2
real cosine_rate(long step, long total, real base);

struct AdamOptions {
    real beta1 = 0.9;
    real beta2 = 0.999;
    real eps = 1e-8;
};

/// Adam with bias correction over every entry of a ParamStore.
class Adam {
public:
    explicit Adam(ad::ParamStore& params, AdamOptions opts = {});

    /// Applies one update from the gradients currently held by the store.
    /// Parameters without a gradient are treated as having a zero gradient.
    void step(real rate);
    long steps() const { return t_; }

    const std::vector<Tensor>& first_moments() const { return m_; }
    const std::vector<Tensor>& second_moments() const { return v_; }

private:
    ad::ParamStore& params_;
    AdamOptions opts_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    long t_ = 0;
};

struct GradCheckOptions {
    real tolerance = 1e-4;
    /// Coordinates checked per parameter group (all of them when the group is
    /// smaller); the largest-magnitude analytic coordinate is always added.
    int samples_per_group = 4;
    std::uint64_t seed = 0;
    /// Negative-control fixture: perturb the analytic gradient of this group.
    std::string corrupt_group;
};

struct GroupCheck {
    std::string name;
    real max_rel_error = 0;
    std::size_t argmax = 0;
    std::size_t checked = 0;
    bool pass = true;
    std::string problem;  // e.g. NaN location
};

struct GradCheckReport {
    std::vector<GroupCheck> groups;
    bool pass = true;

    real worst() const;
    const GroupCheck* first_failure() const;
};

/// |a - b| / max(|a|, |b|, 1e-8)
real relative_error(real analytic, real numeric);

/// Compares reverse-mode gradients of `loss` against central differences with
/// step h = 1e-5 * max(1, |theta|), for every group in `params`.
GradCheckReport grad_check(ad::ParamStore& params, const std::function<ad::Var()>& loss, const GradCheckOptions& opts = {});

}  // namespace hsirecon::optim
