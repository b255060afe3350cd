#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "jan/netpbm.hpp"
#include "jan/tensor.hpp"

namespace jan {

struct Sample {
    Tensor image; // [C,H,W], values in [0,1]
    int label = 0;
    std::string source_id;
};

struct Dataset {
    std::vector<Sample> samples;
    std::vector<std::string> class_names;

    std::size_t size() const noexcept { return samples.size(); }
    Dataset subset(std::span<const std::size_t> indices) const;
    /// Rejects labels outside class_names and pixels outside [0,1].
    void validate() const;
};

/// Bilinear resampling with half-pixel centres (align_corners = false).
Tensor resize_bilinear(const Tensor& image, std::size_t out_height, std::size_t out_width);
Tensor resize_bilinear(const Tensor& image, int out);

/// Normalises by maxval into [0,1]. Grey images are replicated to `channels`;
/// colour images are averaged when `channels` is 1.
Tensor image_to_tensor(const NetpbmImage& image, int channels);

/// Reads, converts and resizes one image to [channels, size, size].
Tensor load_image(const std::filesystem::path& path, int target_size, int channels);

/// root/<class>/*.p?m. Class indices follow sorted directory names; samples
/// are ordered by path.
Dataset load_directory(const std::filesystem::path& root, int target_size, int channels = 3);

/// Writes channel 0 of every sample as an 8-bit PGM under root/<class>/NNNNN.pgm.
void write_dataset(const Dataset& dataset, const std::filesystem::path& root);

} // namespace jan
