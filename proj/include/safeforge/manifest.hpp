// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "safeforge/image.hpp"

namespace safeforge::manifest {

enum class Split { Unassigned, Train, Val, Test };

std::string split_name(Split s);
Split split_from_name(const std::string& name);

struct EntityMention {
    std::string surface;
    std::string type;        // PERSON, GPE, LOC, WORK_OF_ART, ORG, ...
    std::size_t begin = 0;   // [begin, end) char span into the caption
    std::size_t end = 0;
};

struct FilterVerdict {
    std::string rule;
    bool pass = false;
};

struct FaceBox {
    img::Box box;
    double confidence = 0.0;
};

// Image-side columns, filled by the curate stage.
struct ImageInfo {
    std::string path;                       // relative to the image root
    int width = 0;
    int height = 0;
    std::optional<img::Box> crop_box;       // in resized-image coordinates
    std::optional<std::string> curated_path;
    std::optional<double> iqa_score;
    std::optional<std::vector<FaceBox>> face_boxes;
    std::optional<bool> quality_pass;
};

// Grounding-side columns, filled by the ground stage.
struct GroundedMention {
    std::string surface;
    std::string entity_id;
    double link_confidence = 0.0;
};

struct GroundingInfo {
    std::vector<GroundedMention> mentions;
    std::optional<bool> verified;          // target entity found in the image
    std::optional<double> verify_similarity;
    std::optional<std::string> verified_entity_id;
};

// One line of the shared manifest. The record accumulates columns as stages
// run; failed records keep their verdicts instead of being deleted so the
// filtering funnel stays auditable.
struct Record {
    std::string id;
    std::string source;
    std::string caption;
    std::string article_category_raw;
    std::optional<std::string> article_category_unified;
    std::vector<EntityMention> entity_mentions;
    bool mentions_provided = false;  // source shipped its own annotations
    std::size_t token_count = 0;
    Split split = Split::Unassigned;
    std::vector<FilterVerdict> filter_verdicts;
    ImageInfo image;
    GroundingInfo grounding;

    bool passed_all_filters() const;
    bool has_verdict(const std::string& rule) const;
    std::optional<bool> verdict(const std::string& rule) const;
    void set_verdict(const std::string& rule, bool pass);
};

std::string to_json_line(const Record& record);
Record from_json_line(const std::string& line);

std::vector<Record> load(const std::string& path);
void save(const std::vector<Record>& records, const std::string& path);

}  // namespace safeforge::manifest
