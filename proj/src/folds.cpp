#include "jan/folds.hpp"

#include <algorithm>
#include <string>

#include "jan/error.hpp"
#include "jan/rng.hpp"

namespace jan {

std::vector<Fold> stratified_folds(const Dataset& dataset, int folds, std::uint64_t seed) {
    if (folds < 2) throw ConfigError("folds must be >= 2 for cross validation, got " + std::to_string(folds));
    const std::size_t k = static_cast<std::size_t>(folds);

    std::vector<std::vector<std::size_t>> by_class(dataset.class_names.size());
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const int label = dataset.samples[i].label;
        if (label < 0 || static_cast<std::size_t>(label) >= by_class.size()) {
            throw DataError("sample " + std::to_string(i) + " has label outside the class list");
        }
        by_class[static_cast<std::size_t>(label)].push_back(i);
    }
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].size() < k) {
            throw DataError("class '" + dataset.class_names[c] + "' has " + std::to_string(by_class[c].size()) +
                            " samples, fewer than " + std::to_string(folds) + " folds");
        }
    }

    Rng rng(seed);
    std::vector<Fold> out(k);
    std::size_t next = 0;
    for (auto& members : by_class) {
        rng.shuffle(std::span<std::size_t>(members));
        for (std::size_t idx : members) {
            out[next].val.push_back(idx);
            next = (next + 1) % k;
        }
    }
    for (std::size_t f = 0; f < k; ++f) {
        std::sort(out[f].val.begin(), out[f].val.end());
        for (std::size_t g = 0; g < k; ++g) {
            if (g != f) out[f].train.insert(out[f].train.end(), out[g].val.begin(), out[g].val.end());
        }
        std::sort(out[f].train.begin(), out[f].train.end());
    }
    return out;
}

} // namespace jan
