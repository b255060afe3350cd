#pragma once

#include <cstdint>
#include <vector>

#include "jan/dataset.hpp"

namespace jan {

struct Fold {
    std::vector<std::size_t> train; // sorted
    std::vector<std::size_t> val;   // sorted
};

/// Seeded stratified k-fold split. Each class's indices are shuffled, then
/// dealt round-robin across folds with one counter that carries over between
/// classes, so fold sizes differ by at most one. The validation splits
/// partition the dataset. Throws DataError naming any class with fewer than
/// `folds` samples.
std::vector<Fold> stratified_folds(const Dataset& dataset, int folds, std::uint64_t seed);

} // namespace jan
