#include "jan/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "jan/error.hpp"
#include "jan/rng.hpp"

namespace jan {

Shift parse_shift(std::string_view text) {
    if (text == "none") return Shift::None;
    if (text == "wild") return Shift::Wild;
    throw ConfigError("shift must be none or wild, got '" + std::string(text) + "'");
}

namespace {

enum class Pathology { Amd, Dme, Normal };

constexpr double kEdge = 0.35;        // boundary softness, pixels
constexpr double kRowJitter = 0.015;  // per-row intensity jitter
constexpr double kCavityLevel = 0.05;
constexpr double kNoiseSigma = 0.05;

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

std::vector<double> render(Pathology kind, std::size_t size, Rng& rng) {
    using L = SynthLayout;
    const double s = static_cast<double>(size);
    const double offset = rng.uniform(-0.5, 0.5);
    std::array<double, 5> amp{}, phase{};
    for (std::size_t k = 0; k < 5; ++k) {
        amp[k] = rng.uniform(0.0, 0.4);
        phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }

    double bump_amp = 0.0, bump_x = 0.0;
    if (kind == Pathology::Amd) {
        bump_amp = rng.uniform(L::bump_amplitude_min, L::bump_amplitude_max) * s;
        bump_x = s / 2.0 + rng.uniform(-L::bump_center_jitter, L::bump_center_jitter) * s;
    }
    auto boundary = [&](std::size_t k, double x) {
        double b = L::boundaries[k] * s + offset + amp[k] * std::sin(2.0 * std::numbers::pi * x / s + phase[k]);
        if (kind == Pathology::Amd) {
            const double sigma = L::bump_sigma * s;
            const double g = std::exp(-(x - bump_x) * (x - bump_x) / (2.0 * sigma * sigma));
            b -= (k == 1 ? 0.5 : (k >= 2 ? 1.0 : 0.0)) * bump_amp * g;
        }
        return b;
    };

    std::vector<double> px(size * size);
    for (std::size_t x = 0; x < size; ++x) {
        const double xc = static_cast<double>(x) + 0.5;
        std::array<double, 5> b{};
        for (std::size_t k = 0; k < 5; ++k) b[k] = boundary(k, xc);
        for (std::size_t y = 0; y < size; ++y) {
            const double yc = static_cast<double>(y) + 0.5;
            double v = L::levels[0];
            for (std::size_t k = 0; k < 5; ++k) v += (L::levels[k + 1] - L::levels[k]) * logistic((yc - b[k]) / kEdge);
            px[y * size + x] = v;
        }
    }
    for (std::size_t y = 0; y < size; ++y) {
        const double j = kRowJitter * rng.normal();
        for (std::size_t x = 0; x < size; ++x) px[y * size + x] += j;
    }

    if (kind == Pathology::Dme) {
        const double cx = s / 2.0 + rng.uniform(-L::cavity_center_jitter, L::cavity_center_jitter) * s;
        const double cy = 0.5 * (boundary(1, cx) + boundary(2, cx));
        const double ax = rng.uniform(0.10, 0.15) * s;
        const double ay = rng.uniform(0.05, 0.07) * s;
        for (std::size_t y = 0; y < size; ++y) {
            for (std::size_t x = 0; x < size; ++x) {
                const double dx = (static_cast<double>(x) + 0.5 - cx) / ax;
                const double dy = (static_cast<double>(y) + 0.5 - cy) / ay;
                const double mask = logistic((1.0 - (dx * dx + dy * dy)) / 0.15);
                double& v = px[y * size + x];
                v = v * (1.0 - mask) + kCavityLevel * mask;
            }
        }
    }
    for (double& v : px) v = std::clamp(v, 0.0, 1.0);
    return px;
}

void apply_wild(std::vector<double>& px, std::size_t size, Rng& rng) {
    const double s = static_cast<double>(size);
    const long shift = std::lround(rng.uniform(-0.1, 0.1) * s);
    const double contrast = rng.uniform(0.7, 1.3);

    std::vector<double> moved(px.size());
    for (std::size_t y = 0; y < size; ++y) {
        const long src = std::clamp(static_cast<long>(y) - shift, 0L, static_cast<long>(size) - 1);
        std::copy_n(px.begin() + src * static_cast<long>(size), size, moved.begin() + static_cast<long>(y * size));
    }
    double mean = 0.0;
    for (double v : moved) mean += v;
    mean /= static_cast<double>(moved.size());
    for (double& v : moved) {
        v = mean + contrast * (v - mean) + kNoiseSigma * rng.normal();
        v = std::clamp(v, 0.0, 1.0);
    }
    px = std::move(moved);
}

} // namespace

Dataset synth_generate(int n_per_class, int size, Shift shift, std::uint64_t seed, int channels) {
    if (size < 16) throw ConfigError("synthetic image size must be >= 16, got " + std::to_string(size));
    if (n_per_class < 1) throw ConfigError("per-class count must be >= 1, got " + std::to_string(n_per_class));
    if (channels < 1) throw ConfigError("channel count must be >= 1");

    const std::size_t sz = static_cast<std::size_t>(size);
    const std::size_t c = static_cast<std::size_t>(channels);
    Rng rng(seed);
    Dataset ds;
    ds.class_names = {"AMD", "DME", "NORMAL"};
    const Pathology kinds[3] = {Pathology::Amd, Pathology::Dme, Pathology::Normal};
    for (int label = 0; label < 3; ++label) {
        for (int i = 0; i < n_per_class; ++i) {
            auto px = render(kinds[label], sz, rng);
            if (shift == Shift::Wild) apply_wild(px, sz, rng);
            Tensor img(Shape{c, sz, sz});
            for (std::size_t ch = 0; ch < c; ++ch) std::copy(px.begin(), px.end(), img.data().begin() + ch * sz * sz);
            ds.samples.push_back(Sample{std::move(img), label,
                                        "synth:" + ds.class_names[label] + ":" + std::to_string(i) +
                                            (shift == Shift::Wild ? ":wild" : ":none") + ":seed=" +
                                            std::to_string(seed)});
        }
    }
    return ds;
}

} // namespace jan
