// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safeforge/image.hpp"
#include "safeforge/manifest.hpp"
#include "safeforge/models.hpp"

namespace safeforge::grounding {

struct EntityProfile {
    std::string entity_id;
    std::string display_name;
    std::string reference_image;           // path under the repository dir
    Eigen::VectorXd reference_embedding;   // unit L2 norm
    std::size_t sample_count = 0;
};

// On-disk layout: <root>/entities/<entity_id>/reference.<ext> plus
// embedding.f32 (little-endian float32) and profile.jsonl metadata.
class ProfileRepository {
public:
    static ProfileRepository load(const std::string& root);

    void save(const std::string& root) const;

    // Builds a profile from a reference image: the largest detected face is
    // embedded. Throws Error("no_face_in_reference") when the sanity check
    // fails.
    void add_from_reference(const std::string& entity_id,
                            const std::string& display_name,
                            const img::Image& reference,
                            const std::string& reference_path,
                            const models::FaceDetector& detector,
                            const models::FaceEmbedder& embedder);

    const EntityProfile* find(const std::string& entity_id) const;
    EntityProfile* find(const std::string& entity_id);
    const std::map<std::string, EntityProfile>& profiles() const { return profiles_; }

private:
    std::map<std::string, EntityProfile> profiles_;
};

// Links each tagged mention to a canonical entity id; unlinkable mentions
// are dropped with a verdict on the record.
std::vector<manifest::GroundedMention> link_mentions(
    manifest::Record& record, const models::EntityLinker* linker);

struct VerifyResult {
    bool present = false;
    std::optional<manifest::FaceBox> best_box;
    std::optional<double> similarity;
};

// Detects every face, embeds each, and reports the argmax cosine similarity
// against the profile's reference embedding.
VerifyResult verify_entity_in_image(const img::Image& image,
                                    const EntityProfile& profile,
                                    const models::FaceDetector& detector,
                                    const models::FaceEmbedder& embedder,
                                    double min_similarity);

// The target x target window whose center is nearest the face-box centroid,
// clamped inside the image. Ties break toward the smaller offset.
img::Box face_aware_crop(const img::Image& image, const img::Box& target_box,
                         int target);

struct EntitySubset {
    std::vector<manifest::Record> records;
    std::map<std::string, std::size_t> per_entity_counts;  // retained classes
};

// Retains verified records and drops entity classes with fewer than
// min_samples verified pairs.
EntitySubset build_entity_subset(const std::vector<manifest::Record>& records,
                                 const ProfileRepository& profiles,
                                 std::size_t min_samples);

// Square crop used before embedding a detected face during verification and
// entity evaluation.
img::Image eval_face_crop(const img::Image& image, const img::Box& face_box);

}  // namespace safeforge::grounding
