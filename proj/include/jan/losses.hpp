#pragma once

#include "jan/tape.hpp"
#include "jan/tensor.hpp"

namespace jan {

Tensor one_hot(int label, int classes);

/// Categorical cross-entropy -sum(y * log(max(p, 1e-12))). `onehot` must be
/// one-hot and `predicted` a distribution (non-negative, sums to 1 +- 1e-9).
double cross_entropy(const Tensor& onehot, const Tensor& predicted);
Var cross_entropy(Var onehot, Var predicted);

/// Reconstruction error: mean of squared differences over every pixel.
double mse(const Tensor& pixels, const Tensor& reconstructed);
Var mse(Var pixels, Var reconstructed);

/// phi * supervised + (1 - phi) * unsupervised, phi in [0, 1].
double combined_loss(double supervised, double unsupervised, double phi);
Var combined_loss(Var supervised, Var unsupervised, double phi);

} // namespace jan
