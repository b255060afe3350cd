#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jan/tape.hpp"

namespace jan {

struct NamedTensor {
    std::string name;
    Tensor value;
};

/// Builds a scalar loss on `tape` from the registered parameter Vars.
using LossGraph = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradcheckReport {
    double max_relative_error = 0.0;
    bool pass = false;
    std::size_t entries_checked = 0;
    std::string worst_location; // "<param name>[<flat index>]"
    std::string failure;        // set when a gradient or loss was non-finite
};

inline constexpr double kGradcheckStep = 1e-5;

/// Compares reverse-mode gradients of `graph` against central differences
/// (f(x+h) - f(x-h)) / 2h for every entry of every parameter. Relative error
/// is |a - n| / max(|a|, |n|, 1e-8); pass iff the maximum is <= tolerance.
GradcheckReport gradcheck(const LossGraph& graph, std::vector<NamedTensor> params, double tolerance,
                          double step = kGradcheckStep);

} // namespace jan
