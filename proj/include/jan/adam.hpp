#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jan/joint_net.hpp"
#include "jan/tape.hpp"

namespace jan {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moments per parameter (same order as the parameter store)
/// and the shared step counter.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t step = 0;

    static AdamState zeros_like(std::span<const Parameter> params);
    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update of every parameter that has an entry in
/// `grads`; the others keep their value and moments. Throws NumericError
/// naming the parameter if a gradient is not finite.
void adam_step(std::span<Parameter> params, const Gradients& grads, AdamState& state, double lr,
               const AdamHyper& hyper = {});

} // namespace jan
