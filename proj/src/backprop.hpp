#pragma once

#include <span>

#include "jan/tape.hpp"

namespace jan::detail {

// Adds the contribution of `node` to its inputs' gradient buffers.
// grad_in[slot] is null when node.inputs[slot] needs no gradient.
void backprop(const Tape& tape, const Node& node, const Tensor& grad_out, std::span<Tensor* const> grad_in);

} // namespace jan::detail
