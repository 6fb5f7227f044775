#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "chunksr/tensor.hpp"

namespace chunksr::img {

struct ImageU8 {
    int w = 0, h = 0;
    std::vector<uint8_t> rgb;  // 3 bytes per pixel, row-major
};

// PNG (8-bit RGB/RGBA/gray, non-interlaced) or binary PPM (P6, maxval 255),
// chosen by extension with a magic-byte fallback.
ImageU8 read_image(const std::filesystem::path& path);
void write_image(const ImageU8& img, const std::filesystem::path& path);

ImageU8 read_png(const std::filesystem::path& path);
void write_png(const ImageU8& img, const std::filesystem::path& path);
ImageU8 read_ppm(const std::filesystem::path& path);
void write_ppm(const ImageU8& img, const std::filesystem::path& path);

// (1, 3, h, w) in [0, 1]
Tensor to_tensor(const ImageU8& img);
// clamps to [0, 1] and rounds to 8 bits
ImageU8 from_tensor(const Tensor& t, int image_index = 0);

}  // namespace chunksr::img
