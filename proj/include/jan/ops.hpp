#pragma once

#include "jan/tape.hpp"
#include "jan/tensor.hpp"

// Differentiable primitives. Each op comes in two forms: an eager one over
// Tensors and a recording one over Vars. Both share the same kernel, so they
// produce bit-identical values. Every op rejects non-finite inputs/outputs.

namespace jan {

/// Cross-correlation (no kernel flip) plus per-channel bias.
/// input [Cin,H,W], kernel [Cout,Cin,kH,kW], bias [Cout].
/// Same padding gives ceil(H/stride) outputs and needs odd kernels; valid
/// gives floor((H-kH)/stride)+1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              Padding padding);
Var conv2d(Var input, Var kernel, Var bias, std::size_t stride, Padding padding);

/// 2x2 max with stride 2. Gradient goes to the top-left-most maximum.
Tensor maxpool2x2(const Tensor& input);
Var maxpool2x2(Var input);

/// Nearest-neighbour 2x upsampling; the backward pass sums each 2x2 block.
Tensor upsample2x2(const Tensor& input);
Var upsample2x2(Var input);

/// input [D], weights [K,D], bias [K].
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);
Var dense(Var input, Var weights, Var bias);

Tensor relu(const Tensor& input);
Var relu(Var input);

Tensor sigmoid(const Tensor& input);
Var sigmoid(Var input);

/// Rank-1 softmax, shifted by the max before exponentiation.
Tensor softmax(const Tensor& input);
Var softmax(Var input);

/// [C,H,W] -> [C], mean over each plane.
Tensor global_avg_pool(const Tensor& input);
Var global_avg_pool(Var input);

Tensor add(const Tensor& a, const Tensor& b);
Var add(Var a, Var b);

Tensor mul(const Tensor& a, const Tensor& b);
Var mul(Var a, Var b);

Tensor scale(const Tensor& a, double factor);
Var scale(Var a, double factor);

Tensor sum(const Tensor& a);
Var sum(Var a);

/// -sum(y * log(max(p, 1e-12))). No distribution checks here; see losses.hpp.
Tensor cross_entropy_raw(const Tensor& onehot, const Tensor& probs);
Var cross_entropy_raw(Var onehot, Var probs);

/// mean((target - predicted)^2) over all elements.
Tensor mse_raw(const Tensor& target, const Tensor& predicted);
Var mse_raw(Var target, Var predicted);

inline constexpr double kProbFloor = 1e-12;

} // namespace jan
