#include "jan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "jan/error.hpp"

namespace fs = std::filesystem;

namespace jan {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.class_names = class_names;
    out.samples.reserve(indices.size());
    for (std::size_t i : indices) out.samples.push_back(samples.at(i));
    return out;
}

void Dataset::validate() const {
    for (const auto& s : samples) {
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= class_names.size()) {
            throw DataError(s.source_id + ": label " + std::to_string(s.label) + " out of range");
        }
        for (double v : s.image.data()) {
            if (!(v >= 0.0 && v <= 1.0)) throw DataError(s.source_id + ": pixel outside [0,1]");
        }
    }
}

namespace {

struct Tap {
    std::size_t i0, i1;
    double frac;
};

std::vector<Tap> taps(std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t d = 0; d < out; ++d) {
        double src = (static_cast<double>(d) + 0.5) * ratio - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const auto i0 = static_cast<std::size_t>(std::floor(src));
        t[d] = Tap{i0, std::min(i0 + 1, in - 1), src - static_cast<double>(i0)};
    }
    return t;
}

} // namespace

Tensor resize_bilinear(const Tensor& image, std::size_t out_height, std::size_t out_width) {
    if (image.rank() != 3) throw ShapeError("resize_bilinear: expected [C,H,W], got " + shape_string(image.shape()));
    if (out_height < 1 || out_width < 1) throw ShapeError("resize_bilinear: output size must be >= 1");
    const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
    if (h == out_height && w == out_width) return image;
    const auto ty = taps(h, out_height);
    const auto tx = taps(w, out_width);
    Tensor out(Shape{c, out_height, out_width});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < out_height; ++y) {
            for (std::size_t x = 0; x < out_width; ++x) {
                const Tap& a = ty[y];
                const Tap& b = tx[x];
                const double top = image.at(ch, a.i0, b.i0) * (1.0 - b.frac) + image.at(ch, a.i0, b.i1) * b.frac;
                const double bot = image.at(ch, a.i1, b.i0) * (1.0 - b.frac) + image.at(ch, a.i1, b.i1) * b.frac;
                out.at(ch, y, x) = top * (1.0 - a.frac) + bot * a.frac;
            }
        }
    }
    return out;
}

Tensor resize_bilinear(const Tensor& image, int out) {
    if (out < 1) throw ShapeError("resize_bilinear: output size must be >= 1, got " + std::to_string(out));
    return resize_bilinear(image, static_cast<std::size_t>(out), static_cast<std::size_t>(out));
}

Tensor image_to_tensor(const NetpbmImage& img, int channels) {
    if (channels < 1) throw ConfigError("channel count must be >= 1");
    const std::size_t c = static_cast<std::size_t>(channels);
    const std::size_t plane = img.width * img.height;
    const double scale = 1.0 / static_cast<double>(img.maxval);
    Tensor out(Shape{c, img.height, img.width});
    for (std::size_t i = 0; i < plane; ++i) {
        if (img.channels == 1) {
            const double v = img.samples[i] * scale;
            for (std::size_t ch = 0; ch < c; ++ch) out[ch * plane + i] = v;
        } else if (c == 1) {
            const double v = (img.samples[3 * i] + img.samples[3 * i + 1] + img.samples[3 * i + 2]) * scale / 3.0;
            out[i] = v;
        } else {
            for (std::size_t ch = 0; ch < c; ++ch) out[ch * plane + i] = img.samples[3 * i + ch % 3] * scale;
        }
    }
    return out;
}

Tensor load_image(const fs::path& path, int target_size, int channels) {
    return resize_bilinear(image_to_tensor(read_netpbm(path), channels), target_size);
}

namespace {
bool is_netpbm_file(const fs::directory_entry& e) {
    if (!e.is_regular_file()) return false;
    const auto ext = e.path().extension().string();
    return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}
} // namespace

Dataset load_directory(const fs::path& root, int target_size, int channels) {
    if (!fs::is_directory(root)) throw DataError("dataset root is not a directory: " + root.string());
    std::vector<fs::path> class_dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) class_dirs.push_back(e.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) throw DataError("dataset root has no class directories: " + root.string());

    Dataset ds;
    for (std::size_t label = 0; label < class_dirs.size(); ++label) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(class_dirs[label])) {
            if (is_netpbm_file(e)) files.push_back(e.path());
        }
        if (files.empty()) throw DataError("class directory has no images: " + class_dirs[label].string());
        std::sort(files.begin(), files.end());
        ds.class_names.push_back(class_dirs[label].filename().string());
        for (const auto& f : files) {
            ds.samples.push_back(Sample{load_image(f, target_size, channels), static_cast<int>(label), f.string()});
        }
    }
    return ds;
}

void write_dataset(const Dataset& dataset, const fs::path& root) {
    std::vector<std::size_t> counters(dataset.class_names.size(), 0);
    for (const auto& name : dataset.class_names) fs::create_directories(root / name);
    for (const auto& s : dataset.samples) {
        const std::size_t h = s.image.dim(1), w = s.image.dim(2);
        std::vector<std::uint8_t> px(h * w);
        for (std::size_t i = 0; i < h * w; ++i) {
            px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(s.image[i], 0.0, 1.0) * 255.0));
        }
        char name[32];
        std::snprintf(name, sizeof name, "%05zu.pgm", counters.at(static_cast<std::size_t>(s.label))++);
        write_pgm(root / dataset.class_names[static_cast<std::size_t>(s.label)] / name, w, h, px);
    }
}

} // namespace jan
