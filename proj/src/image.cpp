// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "safeforge/error.hpp"

namespace safeforge::img {

namespace {

void skip_pnm_junk(std::istream& in) {
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

int read_pnm_int(std::istream& in) {
    skip_pnm_junk(in);
    int v = 0;
    if (!(in >> v)) throw Error("image_decode_failed", "bad PNM header");
    return v;
}

}  // namespace

Image load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("image_open_failed", path);
    std::string magic;
    in >> magic;
    int channels;
    if (magic == "P5") {
        channels = 1;
    } else if (magic == "P6") {
        channels = 3;
    } else {
        throw Error("image_decode_failed", "unsupported magic '" + magic +
                                               "' in " + path);
    }
    const int w = read_pnm_int(in);
    const int h = read_pnm_int(in);
    const int maxval = read_pnm_int(in);
    if (w <= 0 || h <= 0 || maxval != 255) {
        throw Error("image_decode_failed", "unsupported PNM geometry in " + path);
    }
    in.get();  // single whitespace byte after maxval
    Image out(w, h, channels);
    in.read(reinterpret_cast<char*>(out.data.data()),
            static_cast<std::streamsize>(out.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(out.data.size())) {
        throw Error("image_decode_failed", "truncated pixel data in " + path);
    }
    return out;
}

void save_pnm(const Image& image, const std::string& path) {
    if (image.empty()) throw Error("empty_image", "refusing to write " + path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("image_write_failed", path);
    out << (image.channels == 3 ? "P6" : "P5") << "\n"
        << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data.data()),
              static_cast<std::streamsize>(image.data.size()));
    if (!out) throw Error("image_write_failed", path);
}

Image to_gray(const Image& image) {
    if (image.channels == 1) return image;
    Image out(image.width, image.height, 1);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            // Rec.601 integer luma.
            const int r = image.at(x, y, 0);
            const int g = image.at(x, y, 1);
            const int b = image.at(x, y, 2);
            out.at(x, y) =
                static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b) / 1000);
        }
    }
    return out;
}

Image to_rgb(const Image& image) {
    if (image.channels == 3) return image;
    Image out(image.width, image.height, 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const std::uint8_t v = image.at(x, y);
            out.at(x, y, 0) = v;
            out.at(x, y, 1) = v;
            out.at(x, y, 2) = v;
        }
    }
    return out;
}

Image crop(const Image& image, const Box& box) {
    if (box.w <= 0 || box.h <= 0 || box.x < 0 || box.y < 0 ||
        box.x + box.w > image.width || box.y + box.h > image.height) {
        throw Error("crop_out_of_bounds");
    }
    Image out(box.w, box.h, image.channels);
    for (int y = 0; y < box.h; ++y) {
        for (int x = 0; x < box.w; ++x) {
            for (int c = 0; c < image.channels; ++c) {
                out.at(x, y, c) = image.at(box.x + x, box.y + y, c);
            }
        }
    }
    return out;
}

Image resize_bilinear(const Image& image, int out_w, int out_h) {
    if (image.empty()) throw Error("empty_image");
    if (out_w <= 0 || out_h <= 0) throw Error("invalid_resize");
    if (out_w == image.width && out_h == image.height) return image;
    Image out(out_w, out_h, image.channels);
    const double sx = static_cast<double>(image.width) / out_w;
    const double sy = static_cast<double>(image.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0,
                                  image.height - 1);
        const int y1 = std::min(y0 + 1, image.height - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < out_w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0,
                                      image.width - 1);
            const int x1 = std::min(x0 + 1, image.width - 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            for (int c = 0; c < image.channels; ++c) {
                const double top = image.at(x0, y0, c) * (1.0 - wx) +
                                   image.at(x1, y0, c) * wx;
                const double bot = image.at(x0, y1, c) * (1.0 - wx) +
                                   image.at(x1, y1, c) * wx;
                const double v = top * (1.0 - wy) + bot * wy;
                out.at(x, y, c) =
                    static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

Image resize_short_side(const Image& image, int target) {
    if (image.empty()) throw Error("empty_image");
    if (target <= 0) throw Error("invalid_resize");
    int out_w;
    int out_h;
    if (image.width <= image.height) {
        out_w = target;
        out_h = std::max(target, static_cast<int>(std::lround(
                                     static_cast<double>(image.height) *
                                     target / image.width)));
    } else {
        out_h = target;
        out_w = std::max(target, static_cast<int>(std::lround(
                                     static_cast<double>(image.width) *
                                     target / image.height)));
    }
    return resize_bilinear(image, out_w, out_h);
}

double box_iou(const Box& a, const Box& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.x + a.w, b.x + b.w);
    const int y1 = std::min(a.y + a.h, b.y + b.h);
    const double inter = std::max(0, x1 - x0) * static_cast<double>(std::max(0, y1 - y0));
    const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
    return uni > 0 ? inter / uni : 0.0;
}

}  // namespace safeforge::img
