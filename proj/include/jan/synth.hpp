#pragma once

#include <cstdint>
#include <string_view>

#include "jan/dataset.hpp"

namespace jan {

enum class Shift { None, Wild };

Shift parse_shift(std::string_view text);

/// Geometry of the synthetic B-scan, as fractions of the image height.
/// Exposed so tests can locate the pathology regions independently.
struct SynthLayout {
    static constexpr double boundaries[5] = {0.30, 0.42, 0.60, 0.72, 0.86};
    static constexpr double levels[6] = {0.08, 0.85, 0.55, 0.75, 0.35, 0.15};
    static constexpr double bump_sigma = 0.12;      // of width
    static constexpr double bump_center_jitter = 0.10;
    static constexpr double bump_amplitude_min = 0.12;
    static constexpr double bump_amplitude_max = 0.18;
    static constexpr double cavity_center_jitter = 0.15;
};

/// Layered-stripe images in three classes, named and ordered AMD, DME, NORMAL:
///  - NORMAL: four smooth horizontal bands with mild per-row jitter,
///  - AMD: NORMAL with an upward Gaussian bump deforming the deeper boundaries,
///  - DME: NORMAL with a dark elliptical cavity inside the second band.
/// Shift::Wild adds, per image, a vertical translation of up to 10% of the
/// height, contrast scaling in [0.7, 1.3], Gaussian noise (sigma 0.05), then
/// clamps to [0,1]. Output is a pure function of the arguments.
Dataset synth_generate(int n_per_class, int size, Shift shift, std::uint64_t seed, int channels = 3);

} // namespace jan
