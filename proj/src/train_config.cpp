#include "jan/train_config.hpp"

#include <cmath>
#include <string>

#include "jan/error.hpp"

namespace jan {

const char* mode_name(TrainMode mode) noexcept { return mode == TrainMode::Joint ? "joint" : "backbone"; }

namespace {
void check_phi(double phi, const std::string& what) {
    if (!(phi >= 0.0 && phi <= 1.0)) {
        throw ConfigError(what + " must be in [0, 1], got " + std::to_string(phi));
    }
}
} // namespace

void TrainConfig::validate() const {
    check_phi(phi, "phi");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be > 0, got " + std::to_string(lr));
    if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("kappa must be in (0, 1), got " + std::to_string(kappa));
    if (patience < 1) throw ConfigError("patience must be >= 1, got " + std::to_string(patience));
    if (epochs < 0) throw ConfigError("epochs must be >= 0, got " + std::to_string(epochs));
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1, got " + std::to_string(batch_size));
    if (folds < 1) throw ConfigError("folds must be >= 1, got " + std::to_string(folds));
    if (!(lr_floor >= 0.0) || !std::isfinite(lr_floor)) {
        throw ConfigError("lr_floor must be >= 0, got " + std::to_string(lr_floor));
    }
    int prev = 0;
    for (const auto& [epoch, value] : phi_schedule) {
        if (epoch <= prev) throw ConfigError("phi_schedule epochs must be positive and strictly increasing");
        check_phi(value, "phi_schedule value at epoch " + std::to_string(epoch));
        prev = epoch;
    }
}

double TrainConfig::phi_at(int epoch) const {
    double value = phi;
    for (const auto& [from, v] : phi_schedule) {
        if (from <= epoch) value = v;
    }
    return value;
}

} // namespace jan
