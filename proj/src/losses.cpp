#include "jan/losses.hpp"

#include <cmath>
#include <string>

#include "jan/error.hpp"
#include "jan/ops.hpp"

namespace jan {

namespace {

void check_distributions(const Tensor& onehot, const Tensor& predicted) {
    if (onehot.rank() != 1 || predicted.rank() != 1 || onehot.size() != predicted.size()) {
        throw ShapeError("cross_entropy: class count mismatch " + shape_string(onehot.shape()) + " vs " +
                         shape_string(predicted.shape()));
    }
    int ones = 0;
    for (double y : onehot.data()) {
        if (y == 1.0) ++ones;
        else if (y != 0.0) throw DataError("cross_entropy: target is not one-hot");
    }
    if (ones != 1) throw DataError("cross_entropy: target is not one-hot");
    double total = 0.0;
    for (double p : predicted.data()) {
        if (!(p >= 0.0)) throw DataError("cross_entropy: negative or non-finite probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw DataError("cross_entropy: predictions sum to " + std::to_string(total) + ", expected 1");
    }
}

void check_phi(double phi) {
    if (!(phi >= 0.0 && phi <= 1.0)) {
        throw ConfigError("phi must be in [0, 1], got " + std::to_string(phi));
    }
}

} // namespace

Tensor one_hot(int label, int classes) {
    if (label < 0 || label >= classes) {
        throw DataError("label " + std::to_string(label) + " out of range for " + std::to_string(classes) +
                        " classes");
    }
    Tensor t(Shape{static_cast<std::size_t>(classes)}, 0.0);
    t[static_cast<std::size_t>(label)] = 1.0;
    return t;
}

double cross_entropy(const Tensor& onehot, const Tensor& predicted) {
    check_distributions(onehot, predicted);
    return cross_entropy_raw(onehot, predicted).item();
}

Var cross_entropy(Var onehot, Var predicted) {
    check_distributions(onehot.value(), predicted.value());
    return cross_entropy_raw(onehot, predicted);
}

double mse(const Tensor& pixels, const Tensor& reconstructed) { return mse_raw(pixels, reconstructed).item(); }

Var mse(Var pixels, Var reconstructed) { return mse_raw(pixels, reconstructed); }

double combined_loss(double supervised, double unsupervised, double phi) {
    check_phi(phi);
    return phi * supervised + (1.0 - phi) * unsupervised;
}

Var combined_loss(Var supervised, Var unsupervised, double phi) {
    check_phi(phi);
    return add(scale(supervised, phi), scale(unsupervised, 1.0 - phi));
}

} // namespace jan
