// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace safeforge::img {

// Interleaved 8-bit raster, 1 (gray) or 3 (RGB) channels.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    bool empty() const { return width <= 0 || height <= 0; }

    std::uint8_t& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

struct Box {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool operator==(const Box&) const = default;
};

// PGM (P5) / PPM (P6) binary IO. Lossless, dependency free.
Image load_pnm(const std::string& path);
void save_pnm(const Image& image, const std::string& path);

Image to_gray(const Image& image);
Image to_rgb(const Image& image);

Image crop(const Image& image, const Box& box);

// Bilinear resample to an exact size.
Image resize_bilinear(const Image& image, int out_w, int out_h);

// Proportional resize so the short side equals `target` (long side rounded,
// never below `target`).
Image resize_short_side(const Image& image, int target);

double box_iou(const Box& a, const Box& b);

}  // namespace safeforge::img
