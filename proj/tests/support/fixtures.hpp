// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "safeforge/hash.hpp"
#include "safeforge/image.hpp"
#include "safeforge/manifest.hpp"

namespace safeforge::testing {

// Uniform noise in [lo, hi].
img::Image make_noise_image(int w, int h, std::uint64_t seed,
                            int lo = 0, int hi = 180);

// Rectangles and gradients with clean edges; passes the quality gate and
// stays outside the face detector's intensity band.
img::Image make_structured_image(int w, int h, std::uint64_t seed);

// Gradient only; used as the backdrop for planted faces.
img::Image make_gradient_image(int w, int h);

img::Image make_flat_image(int w, int h, std::uint8_t value);

// Ground-truth plan for one synthetic record.
struct PlannedRecord {
    std::string id;
    std::string caption;
    bool short_caption = false;     // violates the min-words rule
    bool excluded_entity = false;   // carries a PERSON mention (non-entity path)
    bool noise_image = false;       // fails the quality gate
    bool with_face = false;         // face-flagged (fails non-entity face rule)
    bool entity_record = false;     // entity path: verified against the KB
    std::string entity_id;          // for entity records
    int face_identity = 0;
    std::vector<std::string> subjects;  // phrases planted in the caption
};

struct CorpusFixture {
    std::string root;
    std::string manifest_path;
    std::string image_dir;
    std::string kb_path;
    std::string ner_dict_path;
    std::string responses_path;
    std::string profiles_root;
    std::vector<PlannedRecord> plan;
};

struct CorpusOptions {
    std::size_t clean_records = 12;
    std::size_t short_captions = 2;
    std::size_t excluded_entities = 2;
    std::size_t noise_images = 2;
    std::size_t face_images = 2;
    std::size_t entity_records = 0;  // per-entity count handled by n_entities
    std::size_t n_entities = 0;
    std::uint64_t seed = 20260808;
    // Raw images are (raw_side + 16) x raw_side with the short side already
    // at the crop target, so planted faces survive curation pixel-exact.
    int raw_side = 32;
    int crop_target = 32;
};

// Builds a complete on-disk corpus: raw manifest + images + gazetteer + KB
// snapshot + recorded LLM responses + entity reference profiles.
CorpusFixture build_corpus(const std::string& root, const CorpusOptions& options);

// Fresh scratch directory under the given root (wiped if it exists).
std::string scratch_dir(const std::string& base, const std::string& name);

}  // namespace safeforge::testing
