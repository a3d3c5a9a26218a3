// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "safeforge/error.hpp"

namespace safeforge::manifest {

using json = nlohmann::ordered_json;

std::string split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
        case Split::Unassigned: break;
    }
    return "unassigned";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    if (name == "unassigned") return Split::Unassigned;
    throw Error("manifest_parse_failed", "unknown split '" + name + "'");
}

bool Record::passed_all_filters() const {
    if (filter_verdicts.empty()) return false;
    for (const auto& v : filter_verdicts) {
        if (!v.pass) return false;
    }
    return true;
}

bool Record::has_verdict(const std::string& rule) const {
    for (const auto& v : filter_verdicts) {
        if (v.rule == rule) return true;
    }
    return false;
}

std::optional<bool> Record::verdict(const std::string& rule) const {
    for (const auto& v : filter_verdicts) {
        if (v.rule == rule) return v.pass;
    }
    return std::nullopt;
}

void Record::set_verdict(const std::string& rule, bool pass) {
    for (auto& v : filter_verdicts) {
        if (v.rule == rule) {
            v.pass = pass;
            return;
        }
    }
    filter_verdicts.push_back({rule, pass});
}

namespace {

json box_to_json(const img::Box& b) { return json::array({b.x, b.y, b.w, b.h}); }

img::Box box_from_json(const json& j) {
    return img::Box{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(),
                    j.at(3).get<int>()};
}

}  // namespace

std::string to_json_line(const Record& r) {
    json j;
    j["id"] = r.id;
    j["source"] = r.source;
    j["caption"] = r.caption;
    j["article_category_raw"] = r.article_category_raw;
    if (r.article_category_unified) {
        j["article_category_unified"] = *r.article_category_unified;
    } else {
        j["article_category_unified"] = nullptr;
    }
    j["entity_mentions"] = json::array();
    for (const auto& m : r.entity_mentions) {
        j["entity_mentions"].push_back(
            json{{"surface", m.surface}, {"type", m.type}, {"begin", m.begin},
                 {"end", m.end}});
    }
    j["mentions_provided"] = r.mentions_provided;
    j["token_count"] = r.token_count;
    j["split"] = split_name(r.split);
    j["filter_verdicts"] = json::array();
    for (const auto& v : r.filter_verdicts) {
        j["filter_verdicts"].push_back(json::array({v.rule, v.pass}));
    }

    json ji;
    ji["path"] = r.image.path;
    ji["width"] = r.image.width;
    ji["height"] = r.image.height;
    ji["crop_box"] = r.image.crop_box ? box_to_json(*r.image.crop_box) : json(nullptr);
    ji["curated_path"] =
        r.image.curated_path ? json(*r.image.curated_path) : json(nullptr);
    ji["iqa_score"] = r.image.iqa_score ? json(*r.image.iqa_score) : json(nullptr);
    if (r.image.face_boxes) {
        json faces = json::array();
        for (const auto& f : *r.image.face_boxes) {
            faces.push_back(json::array(
                {f.box.x, f.box.y, f.box.w, f.box.h, f.confidence}));
        }
        ji["face_boxes"] = faces;
    } else {
        ji["face_boxes"] = nullptr;
    }
    ji["quality_pass"] =
        r.image.quality_pass ? json(*r.image.quality_pass) : json(nullptr);
    j["image"] = ji;

    json jg;
    jg["mentions"] = json::array();
    for (const auto& m : r.grounding.mentions) {
        jg["mentions"].push_back(json{{"surface", m.surface},
                                      {"entity_id", m.entity_id},
                                      {"confidence", m.link_confidence}});
    }
    jg["verified"] =
        r.grounding.verified ? json(*r.grounding.verified) : json(nullptr);
    jg["verify_similarity"] = r.grounding.verify_similarity
                                  ? json(*r.grounding.verify_similarity)
                                  : json(nullptr);
    jg["verified_entity_id"] = r.grounding.verified_entity_id
                                   ? json(*r.grounding.verified_entity_id)
                                   : json(nullptr);
    j["grounding"] = jg;

    return j.dump();
}

Record from_json_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw Error("manifest_parse_failed", e.what());
    }
    Record r;
    try {
        r.id = j.at("id").get<std::string>();
        r.source = j.value("source", std::string{});
        r.caption = j.at("caption").get<std::string>();
        r.article_category_raw = j.value("article_category_raw", std::string{});
        if (j.contains("article_category_unified") &&
            !j["article_category_unified"].is_null()) {
            r.article_category_unified =
                j["article_category_unified"].get<std::string>();
        }
        if (j.contains("entity_mentions")) {
            for (const auto& m : j["entity_mentions"]) {
                EntityMention em;
                em.surface = m.at("surface").get<std::string>();
                em.type = m.at("type").get<std::string>();
                em.begin = m.at("begin").get<std::size_t>();
                em.end = m.at("end").get<std::size_t>();
                r.entity_mentions.push_back(std::move(em));
            }
        }
        r.mentions_provided = j.value("mentions_provided", false);
        r.token_count = j.value("token_count", std::size_t{0});
        r.split = split_from_name(j.value("split", std::string{"unassigned"}));
        if (j.contains("filter_verdicts")) {
            for (const auto& v : j["filter_verdicts"]) {
                r.filter_verdicts.push_back(
                    {v.at(0).get<std::string>(), v.at(1).get<bool>()});
            }
        }
        if (j.contains("image") && j["image"].is_object()) {
            const auto& ji = j["image"];
            r.image.path = ji.value("path", std::string{});
            r.image.width = ji.value("width", 0);
            r.image.height = ji.value("height", 0);
            if (ji.contains("crop_box") && !ji["crop_box"].is_null()) {
                r.image.crop_box = box_from_json(ji["crop_box"]);
            }
            if (ji.contains("curated_path") && !ji["curated_path"].is_null()) {
                r.image.curated_path = ji["curated_path"].get<std::string>();
            }
            if (ji.contains("iqa_score") && !ji["iqa_score"].is_null()) {
                r.image.iqa_score = ji["iqa_score"].get<double>();
            }
            if (ji.contains("face_boxes") && !ji["face_boxes"].is_null()) {
                std::vector<FaceBox> faces;
                for (const auto& f : ji["face_boxes"]) {
                    faces.push_back({img::Box{f.at(0).get<int>(),
                                              f.at(1).get<int>(),
                                              f.at(2).get<int>(),
                                              f.at(3).get<int>()},
                                     f.at(4).get<double>()});
                }
                r.image.face_boxes = std::move(faces);
            }
            if (ji.contains("quality_pass") && !ji["quality_pass"].is_null()) {
                r.image.quality_pass = ji["quality_pass"].get<bool>();
            }
        }
        if (j.contains("grounding") && j["grounding"].is_object()) {
            const auto& jg = j["grounding"];
            if (jg.contains("mentions")) {
                for (const auto& m : jg["mentions"]) {
                    r.grounding.mentions.push_back(
                        {m.at("surface").get<std::string>(),
                         m.at("entity_id").get<std::string>(),
                         m.at("confidence").get<double>()});
                }
            }
            if (jg.contains("verified") && !jg["verified"].is_null()) {
                r.grounding.verified = jg["verified"].get<bool>();
            }
            if (jg.contains("verify_similarity") &&
                !jg["verify_similarity"].is_null()) {
                r.grounding.verify_similarity =
                    jg["verify_similarity"].get<double>();
            }
            if (jg.contains("verified_entity_id") &&
                !jg["verified_entity_id"].is_null()) {
                r.grounding.verified_entity_id =
                    jg["verified_entity_id"].get<std::string>();
            }
        }
    } catch (const json::exception& e) {
        throw Error("manifest_parse_failed", e.what());
    }
    return r;
}

std::vector<Record> load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("manifest_open_failed", path);
    std::vector<Record> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(from_json_line(line));
    }
    return out;
}

void save(const std::vector<Record>& records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("manifest_write_failed", path);
    for (const auto& r : records) {
        out << to_json_line(r) << "\n";
    }
    if (!out) throw Error("manifest_write_failed", path);
}

}  // namespace safeforge::manifest
