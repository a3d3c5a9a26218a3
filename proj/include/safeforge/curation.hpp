// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "safeforge/image.hpp"
#include "safeforge/manifest.hpp"
#include "safeforge/models.hpp"

namespace safeforge::curation {

// Standardizes resolution: the image is first resized so its short side
// equals `target`, then the target x target window along the long axis that
// maximizes the Shannon entropy of the window's 256-bin grayscale histogram
// is selected. Ties break toward the window whose center is closest to the
// image center, then toward the smaller offset. The returned box is in
// resized-image coordinates. Window stride is 1 when the resized long side
// is <= 2 * target, 8 otherwise (the final offset is always evaluated).
img::Box entropy_crop(const img::Image& image, int target);

// Entropy of one window, exposed for the brute-force oracle (256-bin
// grayscale histogram, bins summed in index order).
double window_entropy(const img::Image& gray, const img::Box& window);

double score_quality(const img::Image& image, const models::IqaModel* iqa);

// The quality rule: a score at the threshold passes.
inline bool quality_gate(double score, double threshold) {
    return score >= threshold;
}

std::vector<manifest::FaceBox> flag_faces(const img::Image& image,
                                          const models::FaceDetector* detector,
                                          double min_confidence);

}  // namespace safeforge::curation
