#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace jan {

enum class TrainMode { Joint, Backbone };

const char* mode_name(TrainMode mode) noexcept;

/// Optimisation hyper-parameters. Defaults: Adam at 1e-4, decayed by 0.1
/// after 4 epochs without validation improvement, batches of 4, 30 epochs,
/// and an even phi = 0.5 split between the two losses.
struct TrainConfig {
    double phi = 0.5;
    double lr = 1e-4;
    double kappa = 0.1;
    int patience = 4;
    int epochs = 30;
    int batch_size = 4;
    std::uint64_t seed = 1;
    int folds = 5;
    double lr_floor = 1e-7;
    /// (epoch, phi) pairs; from that 1-based epoch on, phi takes the value.
    std::vector<std::pair<int, double>> phi_schedule;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    /// phi in effect for a 1-based epoch.
    double phi_at(int epoch) const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

} // namespace jan
