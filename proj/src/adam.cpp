#include "jan/adam.hpp"

#include <cmath>

#include "jan/error.hpp"

namespace jan {

AdamState AdamState::zeros_like(std::span<const Parameter> params) {
    AdamState s;
    for (const auto& p : params) {
        s.m.emplace_back(p.value.shape(), 0.0);
        s.v.emplace_back(p.value.shape(), 0.0);
    }
    return s;
}

void adam_step(std::span<Parameter> params, const Gradients& grads, AdamState& state, double lr,
               const AdamHyper& hyper) {
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adam: optimizer state does not match parameter count");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!grads.contains(ParamId{i})) continue;
        const Tensor& g = grads.at(ParamId{i});
        if (g.shape() != params[i].value.shape()) {
            throw ShapeError("adam: gradient " + shape_string(g.shape()) + " does not match parameter " +
                             params[i].name + " " + shape_string(params[i].value.shape()));
        }
        if (!g.all_finite()) throw NumericError("adam: non-finite gradient for parameter " + params[i].name);
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(hyper.beta1, t);
    const double c2 = 1.0 - std::pow(hyper.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!grads.contains(ParamId{i})) continue;
        const Tensor& g = grads.at(ParamId{i});
        Tensor& w = params[i].value;
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * g[j];
            v[j] = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * g[j] * g[j];
            const double m_hat = m[j] / c1;
            const double v_hat = v[j] / c2;
            w[j] -= lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
        }
    }
}

} // namespace jan
