// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "safeforge/error.hpp"

namespace safeforge::grounding {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_embedding_f32(const Eigen::VectorXd& v, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("profile_write_failed", path);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const float f = static_cast<float>(v[i]);
        out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
}

Eigen::VectorXd read_embedding_f32(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("profile_read_failed", path);
    std::vector<float> buf;
    float f;
    while (in.read(reinterpret_cast<char*>(&f), sizeof(f))) buf.push_back(f);
    Eigen::VectorXd v(static_cast<Eigen::Index>(buf.size()));
    for (std::size_t i = 0; i < buf.size(); ++i) v[static_cast<Eigen::Index>(i)] = buf[i];
    return v;
}

}  // namespace

ProfileRepository ProfileRepository::load(const std::string& root) {
    ProfileRepository repo;
    const fs::path entities = fs::path(root) / "entities";
    if (!fs::exists(entities)) {
        throw Error("profile_repo_missing", entities.string());
    }
    for (const auto& dir : fs::directory_iterator(entities)) {
        if (!dir.is_directory()) continue;
        const fs::path meta = dir.path() / "profile.jsonl";
        std::ifstream in(meta);
        if (!in) continue;
        std::string line;
        if (!std::getline(in, line)) continue;
        json j = json::parse(line);
        EntityProfile p;
        p.entity_id = j.at("entity_id").get<std::string>();
        p.display_name = j.value("display_name", std::string{});
        p.reference_image = j.value("reference_image", std::string{});
        p.sample_count = j.value("sample_count", std::size_t{0});
        p.reference_embedding =
            read_embedding_f32((dir.path() / "embedding.f32").string());
        const double norm = p.reference_embedding.norm();
        if (std::abs(norm - 1.0) > 1e-6) {
            if (norm <= 0.0) throw Error("profile_corrupt", p.entity_id);
            p.reference_embedding /= norm;
        }
        repo.profiles_[p.entity_id] = std::move(p);
    }
    return repo;
}

void ProfileRepository::save(const std::string& root) const {
    for (const auto& [id, p] : profiles_) {
        const fs::path dir = fs::path(root) / "entities" / id;
        fs::create_directories(dir);
        write_embedding_f32(p.reference_embedding, (dir / "embedding.f32").string());
        json j;
        j["entity_id"] = p.entity_id;
        j["display_name"] = p.display_name;
        j["reference_image"] = p.reference_image;
        j["sample_count"] = p.sample_count;
        std::ofstream out(dir / "profile.jsonl", std::ios::trunc);
        out << j.dump() << "\n";
        if (!out) throw Error("profile_write_failed", (dir / "profile.jsonl").string());
    }
}

void ProfileRepository::add_from_reference(const std::string& entity_id,
                                           const std::string& display_name,
                                           const img::Image& reference,
                                           const std::string& reference_path,
                                           const models::FaceDetector& detector,
                                           const models::FaceEmbedder& embedder) {
    const auto faces = detector.detect(reference);
    if (faces.empty()) {
        throw Error("no_face_in_reference", entity_id);
    }
    // Largest-area face wins when the reference shows several.
    const auto* best = &faces.front();
    for (const auto& f : faces) {
        if (static_cast<long>(f.box.w) * f.box.h >
            static_cast<long>(best->box.w) * best->box.h) {
            best = &f;
        }
    }
    EntityProfile p;
    p.entity_id = entity_id;
    p.display_name = display_name;
    p.reference_image = reference_path;
    p.reference_embedding = embedder.embed(eval_face_crop(reference, best->box));
    const double norm = p.reference_embedding.norm();
    if (norm <= 0.0) throw Error("profile_corrupt", entity_id);
    p.reference_embedding /= norm;
    profiles_[entity_id] = std::move(p);
}

const EntityProfile* ProfileRepository::find(const std::string& entity_id) const {
    const auto it = profiles_.find(entity_id);
    return it == profiles_.end() ? nullptr : &it->second;
}

EntityProfile* ProfileRepository::find(const std::string& entity_id) {
    const auto it = profiles_.find(entity_id);
    return it == profiles_.end() ? nullptr : &it->second;
}

std::vector<manifest::GroundedMention> link_mentions(
    manifest::Record& record, const models::EntityLinker* linker) {
    if (linker == nullptr) throw Error("linker_unavailable");
    std::vector<manifest::GroundedMention> out;
    bool dropped = false;
    for (const auto& m : record.entity_mentions) {
        const auto res = linker->link(m.surface);
        if (res) {
            out.push_back({m.surface, res->entity_id, res->confidence});
        } else {
            dropped = true;
        }
    }
    if (dropped) record.set_verdict("unlinkable_mentions_dropped", true);
    return out;
}

VerifyResult verify_entity_in_image(const img::Image& image,
                                    const EntityProfile& profile,
                                    const models::FaceDetector& detector,
                                    const models::FaceEmbedder& embedder,
                                    double min_similarity) {
    if (profile.reference_embedding.size() == 0) {
        throw Error("profile_missing_embedding", profile.entity_id);
    }
    VerifyResult result;
    const auto faces = detector.detect(image);
    if (faces.empty()) return result;  // present=false, no box, no similarity

    double best_sim = -2.0;
    manifest::FaceBox best_box{};
    for (const auto& f : faces) {
        const Eigen::VectorXd e = embedder.embed(eval_face_crop(image, f.box));
        const double sim = e.dot(profile.reference_embedding) /
                           std::max(1e-12, e.norm());
        if (sim > best_sim) {
            best_sim = sim;
            best_box = f;
        }
    }
    result.best_box = best_box;
    result.similarity = best_sim;
    result.present = best_sim >= min_similarity;
    return result;
}

img::Box face_aware_crop(const img::Image& image, const img::Box& target_box,
                         int target) {
    if (image.empty()) throw Error("empty_image");
    if (target_box.w <= 0 || target_box.h <= 0) throw Error("empty_face_box");
    if (target <= 0 || target > image.width || target > image.height) {
        throw Error("invalid_crop_target");
    }
    const double cx = target_box.x + target_box.w / 2.0;
    const double cy = target_box.y + target_box.h / 2.0;

    // The distance to the centroid is separable and convex per axis, so the
    // clamped rounding of the unconstrained optimum is the global argmax.
    // Exact .5 fractions round down (smaller offset).
    auto best_offset = [](double center, int window, int limit) {
        const double opt = center - window / 2.0;
        int lo = static_cast<int>(std::floor(opt));
        int cand[2] = {lo, lo + 1};
        int best = std::clamp(cand[0], 0, limit);
        double best_d = std::abs(best + window / 2.0 - center);
        for (int k = 1; k < 2; ++k) {
            const int c = std::clamp(cand[k], 0, limit);
            const double d = std::abs(c + window / 2.0 - center);
            if (d < best_d || (d == best_d && c < best)) {
                best = c;
                best_d = d;
            }
        }
        return best;
    };

    const int x0 = best_offset(cx, target, image.width - target);
    const int y0 = best_offset(cy, target, image.height - target);
    return img::Box{x0, y0, target, target};
}

EntitySubset build_entity_subset(const std::vector<manifest::Record>& records,
                                 const ProfileRepository& profiles,
                                 std::size_t min_samples) {
    std::map<std::string, std::size_t> counts;
    std::vector<const manifest::Record*> verified;
    for (const auto& r : records) {
        if (!r.grounding.verified.value_or(false)) continue;
        if (!r.grounding.verified_entity_id) continue;
        if (profiles.find(*r.grounding.verified_entity_id) == nullptr) continue;
        verified.push_back(&r);
        ++counts[*r.grounding.verified_entity_id];
    }

    EntitySubset subset;
    for (const auto& [id, n] : counts) {
        if (n >= min_samples) subset.per_entity_counts[id] = n;
    }
    for (const auto* r : verified) {
        if (subset.per_entity_counts.count(*r->grounding.verified_entity_id) > 0) {
            subset.records.push_back(*r);
        }
    }
    return subset;
}

img::Image eval_face_crop(const img::Image& image, const img::Box& face_box) {
    // Face-aware window around the box: square side twice the larger box
    // dimension, clamped to the image.
    const int side = std::min({std::max(face_box.w, face_box.h) * 2,
                               image.width, image.height});
    const img::Box window = face_aware_crop(image, face_box, std::max(1, side));
    return img::crop(image, window);
}

}  // namespace safeforge::grounding
