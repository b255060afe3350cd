#include "jan/scheduler.hpp"

#include <algorithm>
#include <string>

#include "jan/error.hpp"

namespace jan {

PlateauScheduler::PlateauScheduler(int patience, double kappa, double floor)
    : patience_(patience), kappa_(kappa), floor_(floor) {
    if (patience < 1) throw ConfigError("patience must be >= 1, got " + std::to_string(patience));
}

double PlateauScheduler::update(double val_loss, double lr) {
    if (val_loss < best_) {
        best_ = val_loss;
        bad_epochs_ = 0;
        return lr;
    }
    if (++bad_epochs_ >= patience_) {
        bad_epochs_ = 0;
        return std::max(lr * kappa_, floor_);
    }
    return lr;
}

double plateau_update(std::span<const double> history, double lr, int patience, double kappa, double floor) {
    PlateauScheduler s(patience, kappa, floor);
    for (double loss : history) lr = s.update(loss, lr);
    return lr;
}

} // namespace jan
