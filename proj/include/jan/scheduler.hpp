#pragma once

#include <limits>
#include <span>

namespace jan {

/// Reduce-on-plateau: after `patience` consecutive epochs whose validation
/// loss is not strictly below the best so far, lr <- max(lr * kappa, floor)
/// and the counter restarts.
class PlateauScheduler {
public:
    PlateauScheduler(int patience, double kappa, double floor);

    /// Feeds one epoch's validation loss; returns the learning rate to use next.
    double update(double val_loss, double lr);

    double best() const noexcept { return best_; }
    int bad_epochs() const noexcept { return bad_epochs_; }

private:
    int patience_;
    double kappa_;
    double floor_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_epochs_ = 0;
};

/// Replays a whole validation-loss history from a fresh scheduler.
double plateau_update(std::span<const double> history, double lr, int patience, double kappa, double floor);

} // namespace jan
