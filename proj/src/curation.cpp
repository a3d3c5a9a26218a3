// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/curation.hpp"

#include <array>
#include <cmath>

#include "safeforge/error.hpp"

namespace safeforge::curation {

namespace {

double histogram_entropy(const std::array<std::int64_t, 256>& hist,
                         std::int64_t area) {
    double e = 0.0;
    const auto inv_area = 1.0 / static_cast<double>(area);
    for (int b = 0; b < 256; ++b) {
        if (hist[b] > 0) {
            const double p = static_cast<double>(hist[b]) * inv_area;
            e -= p * std::log2(p);
        }
    }
    return e;
}

}  // namespace

double window_entropy(const img::Image& gray, const img::Box& window) {
    std::array<std::int64_t, 256> hist{};
    for (int y = window.y; y < window.y + window.h; ++y) {
        for (int x = window.x; x < window.x + window.w; ++x) {
            ++hist[gray.at(x, y)];
        }
    }
    return histogram_entropy(hist, static_cast<std::int64_t>(window.w) * window.h);
}

img::Box entropy_crop(const img::Image& image, int target) {
    if (image.empty()) throw Error("empty_image");
    if (target <= 0) throw Error("invalid_crop_target");

    const img::Image resized = img::resize_short_side(image, target);
    const img::Image gray = img::to_gray(resized);
    const bool horizontal = resized.width >= resized.height;
    const int long_side = horizontal ? resized.width : resized.height;
    const int max_offset = long_side - target;
    const int stride = long_side <= 2 * target ? 1 : 8;

    std::vector<int> offsets;
    for (int off = 0; off <= max_offset; off += stride) offsets.push_back(off);
    if (offsets.back() != max_offset) offsets.push_back(max_offset);

    // Sliding histogram along the long axis; entropy recomputed per window
    // from exact integer counts so it matches a from-scratch recount.
    std::array<std::int64_t, 256> hist{};
    const std::int64_t area = static_cast<std::int64_t>(target) * target;
    auto column_add = [&](int pos, int delta) {
        if (horizontal) {
            for (int y = 0; y < target; ++y) hist[gray.at(pos, y)] += delta;
        } else {
            for (int x = 0; x < target; ++x) hist[gray.at(x, pos)] += delta;
        }
    };
    for (int p = 0; p < target; ++p) column_add(p, +1);

    const double image_center = (long_side - 1) / 2.0;
    int best_offset = 0;
    double best_entropy = -1.0;
    double best_center_dist = 0.0;
    int window_start = 0;  // current histogram covers [window_start, window_start+target)
    for (const int off : offsets) {
        while (window_start < off) {
            column_add(window_start, -1);
            column_add(window_start + target, +1);
            ++window_start;
        }
        const double e = histogram_entropy(hist, area);
        const double center_dist =
            std::abs(off + (target - 1) / 2.0 - image_center);
        const bool better =
            e > best_entropy ||
            (e == best_entropy && (center_dist < best_center_dist ||
                                   (center_dist == best_center_dist &&
                                    off < best_offset)));
        if (better) {
            best_entropy = e;
            best_offset = off;
            best_center_dist = center_dist;
        }
    }

    return horizontal ? img::Box{best_offset, 0, target, target}
                      : img::Box{0, best_offset, target, target};
}

double score_quality(const img::Image& image, const models::IqaModel* iqa) {
    if (image.empty()) throw Error("empty_image");
    if (iqa == nullptr) throw Error("iqa_backend_unavailable");
    return iqa->score(image);
}

std::vector<manifest::FaceBox> flag_faces(const img::Image& image,
                                          const models::FaceDetector* detector,
                                          double min_confidence) {
    if (image.empty()) throw Error("empty_image");
    if (detector == nullptr) throw Error("detector_unavailable");
    std::vector<manifest::FaceBox> out;
    for (const auto& f : detector->detect(image)) {
        if (f.confidence >= min_confidence) out.push_back(f);
    }
    return out;
}

}  // namespace safeforge::curation
