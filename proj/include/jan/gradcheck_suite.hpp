#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jan/gradcheck.hpp"

namespace jan {

struct GradcheckCase {
    std::string name;
    GradcheckReport report;
};

/// Default seed for the reference suite.
inline constexpr std::uint64_t kGradcheckSeed = 7;

/// Every primitive (each wrapped in a random linear readout so no gradient is
/// trivially constant) and the full joint network at 16x16, 2 stages, phi 0.5.
std::vector<GradcheckCase> reference_gradchecks(std::uint64_t seed, double tolerance);

} // namespace jan
