#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace jan {

/// Decoded PGM/PPM raster. Samples are interleaved per pixel, row-major.
struct NetpbmImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0; // 1 for PGM, 3 for PPM
    std::uint32_t maxval = 0;
    std::vector<std::uint16_t> samples;
};

/// Parses P2/P5 (PGM) and P3/P6 (PPM) with maxval <= 65535. Binary rasters
/// with maxval > 255 use two big-endian bytes per sample. Errors carry
/// `origin` and the byte offset where parsing stopped.
NetpbmImage parse_netpbm(std::span<const std::uint8_t> bytes, const std::string& origin);
NetpbmImage read_netpbm(const std::filesystem::path& path);

/// Binary P5 with maxval 255.
std::vector<std::uint8_t> encode_pgm(std::size_t width, std::size_t height, std::span<const std::uint8_t> pixels);
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> pixels);

} // namespace jan
