// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "support/fixtures.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "safeforge/builtin_models.hpp"
#include "safeforge/grounding.hpp"
#include "safeforge/subjects.hpp"

namespace safeforge::testing {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

img::Image make_noise_image(int w, int h, std::uint64_t seed, int lo, int hi) {
    img::Image out(w, h, 3);
    DetRng rng(seed);
    for (auto& px : out.data) {
        px = static_cast<std::uint8_t>(rng.next_int(lo, hi));
    }
    return out;
}

img::Image make_gradient_image(int w, int h) {
    img::Image out(w, h, 3);
    // Vertical gradient, kept below the face band.
    for (int y = 0; y < h; ++y) {
        const auto v = static_cast<std::uint8_t>(30 + 100 * y / std::max(1, h - 1));
        for (int x = 0; x < w; ++x) {
            out.at(x, y, 0) = v;
            out.at(x, y, 1) = static_cast<std::uint8_t>(v / 2 + 20);
            out.at(x, y, 2) = static_cast<std::uint8_t>(150 - v / 2);
        }
    }
    return out;
}

img::Image make_structured_image(int w, int h, std::uint64_t seed) {
    img::Image out = make_gradient_image(w, h);
    DetRng rng(seed);
    // A few solid rectangles for edges.
    const int n_rects = 3 + static_cast<int>(rng.next_int(0, 2));
    for (int i = 0; i < n_rects; ++i) {
        const int rw = static_cast<int>(rng.next_int(w / 6, w / 3));
        const int rh = static_cast<int>(rng.next_int(h / 6, h / 3));
        const int rx = static_cast<int>(rng.next_int(0, std::max(0, w - rw - 1)));
        const int ry = static_cast<int>(rng.next_int(0, std::max(0, h - rh - 1)));
        const auto val = static_cast<std::uint8_t>(rng.next_int(40, 170));
        for (int y = ry; y < ry + rh; ++y) {
            for (int x = rx; x < rx + rw; ++x) {
                out.at(x, y, 0) = val;
                out.at(x, y, 1) = static_cast<std::uint8_t>(255 - val);
                out.at(x, y, 2) = val;
            }
        }
    }
    return out;
}

img::Image make_flat_image(int w, int h, std::uint8_t value) {
    return img::Image(w, h, 3, value);
}

std::string scratch_dir(const std::string& base, const std::string& name) {
    const fs::path dir = fs::path(base) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

namespace {

const char* kNouns[] = {"bridge", "garden", "workshop", "harbor", "museum",
                        "orchard", "library", "bakery", "stadium", "canal"};
const char* kObjects[] = {"lanterns", "bicycles", "sculptures", "umbrellas",
                          "kites",    "barrels",  "banners",    "crates"};
const char* kVerbs[] = {"lines", "surrounds", "overlooks", "fills", "frames"};

struct EntitySpec {
    const char* id;
    const char* display;
    const char* alias;
};
const EntitySpec kEntities[] = {
    {"E1", "Mara Voss", "Voss"},
    {"E2", "Ilya Brandt", "Brandt"},
    {"E3", "Nuria Falk", "Falk"},
};

std::string subject_response(const std::string& main_subject,
                             const std::vector<std::string>& additional) {
    json j;
    j["main_topic_word"] = main_subject;
    j["additional_topic_words"] = additional;
    return j.dump();
}

}  // namespace

CorpusFixture build_corpus(const std::string& root, const CorpusOptions& opt) {
    CorpusFixture fx;
    fx.root = root;
    fs::create_directories(root);
    fx.image_dir = (fs::path(root) / "images").string();
    fs::create_directories(fx.image_dir);
    fx.manifest_path = (fs::path(root) / "manifest.jsonl").string();
    fx.kb_path = (fs::path(root) / "kb.jsonl").string();
    fx.ner_dict_path = (fs::path(root) / "ner_dict.jsonl").string();
    fx.responses_path = (fs::path(root) / "responses.jsonl").string();
    fx.profiles_root = (fs::path(root) / "profiles").string();

    DetRng rng(opt.seed);
    std::vector<PlannedRecord> plan;
    std::size_t serial = 0;

    auto entity_index = [](const std::string& id) {
        for (int i = 0; i < 3; ++i) {
            if (kEntities[i].id == id) return i;
        }
        return 0;
    };
    auto make_caption = [&](PlannedRecord& r) {
        const std::string noun = kNouns[rng.next_int(0, 9)];
        const std::string obj = kObjects[rng.next_int(0, 7)];
        const std::string verb = kVerbs[rng.next_int(0, 4)];
        if (r.short_caption) {
            r.caption = "A quiet " + noun + " here.";  // 4 words
            return;
        }
        if (r.excluded_entity || r.entity_record) {
            const auto& e = r.entity_record
                                ? kEntities[entity_index(r.entity_id)]
                                : kEntities[rng.next_int(0, 2)];
            r.caption = std::string(e.display) + " visits the " + noun +
                        " where a row of " + obj + " " + verb + " the entrance.";
            r.subjects = {noun, obj};
            return;
        }
        r.caption = "The old " + noun + " " + verb + " a row of " + obj +
                    " during the morning market.";
        r.subjects = {noun, obj};
    };

    auto add_records = [&](std::size_t count, auto setup) {
        for (std::size_t i = 0; i < count; ++i) {
            PlannedRecord r;
            r.id = "rec" + std::to_string(serial++);
            setup(r);
            make_caption(r);
            plan.push_back(std::move(r));
        }
    };

    add_records(opt.clean_records, [](PlannedRecord&) {});
    add_records(opt.short_captions, [](PlannedRecord& r) { r.short_caption = true; });
    add_records(opt.excluded_entities,
                [](PlannedRecord& r) { r.excluded_entity = true; });
    add_records(opt.noise_images, [](PlannedRecord& r) { r.noise_image = true; });
    add_records(opt.face_images, [](PlannedRecord& r) { r.with_face = true; });
    for (std::size_t e = 0; e < opt.n_entities && e < 3; ++e) {
        add_records(opt.entity_records, [&](PlannedRecord& r) {
            r.entity_record = true;
            r.entity_id = kEntities[e].id;
            r.face_identity = static_cast<int>(e);
        });
    }

    // Images + manifest.
    std::ofstream mf(fx.manifest_path, std::ios::trunc);
    const int w = opt.raw_side + 16;
    const int h = opt.raw_side;
    for (auto& r : plan) {
        img::Image image;
        if (r.noise_image) {
            image = make_noise_image(w, h, fnv1a64(r.id, opt.seed));
        } else if (r.with_face || r.entity_record) {
            // Plain backdrop keeps the face the most textured region, so the
            // entropy window retains it.
            image = make_gradient_image(w, h);
            const int side = h / 2;
            builtin::paint_face(image,
                                img::Box{w / 2 - side / 2, h / 2 - side / 2,
                                         side, side},
                                r.face_identity);
        } else {
            image = make_structured_image(w, h, fnv1a64(r.id, opt.seed));
        }
        const std::string name = r.id + ".ppm";
        img::save_pnm(image, (fs::path(fx.image_dir) / name).string());

        manifest::Record rec;
        rec.id = r.id;
        rec.source = "synthetic";
        rec.caption = r.caption;
        rec.article_category_raw = "sports column";
        rec.image.path = (fs::path("images") / name).string();
        mf << manifest::to_json_line(rec) << "\n";
    }
    mf.close();

    // Gazetteer: the fictitious people.
    {
        std::ofstream out(fx.ner_dict_path, std::ios::trunc);
        for (const auto& e : kEntities) {
            out << json{{"surface", e.display}, {"type", "PERSON"}}.dump() << "\n";
            out << json{{"surface", e.alias}, {"type", "PERSON"}}.dump() << "\n";
        }
    }

    // Knowledge snapshot.
    {
        std::ofstream out(fx.kb_path, std::ios::trunc);
        for (const auto& e : kEntities) {
            json j;
            j["entity_id"] = e.id;
            j["display_name"] = e.display;
            j["aliases"] = json::array({e.alias});
            out << j.dump() << "\n";
        }
    }

    // Recorded LLM responses keyed by the rendered user prompt.
    {
        const auto tpl = subjects::PromptTemplate::structured_json();
        std::ofstream out(fx.responses_path, std::ios::trunc);
        for (const auto& r : plan) {
            if (r.subjects.empty()) continue;
            json j;
            j["key"] = builtin::ReplayLlmClient::key_for(tpl.render(r.caption));
            j["response"] = subject_response(
                r.subjects.front(),
                {r.subjects.begin() + 1, r.subjects.end()});
            out << j.dump() << "\n";
        }
    }

    // Entity reference profiles (reference image shows the same identity).
    if (opt.n_entities > 0) {
        const builtin::TinyFaceDetector detector;
        const builtin::TinyFaceEmbedder embedder;
        grounding::ProfileRepository repo;
        for (std::size_t e = 0; e < opt.n_entities && e < 3; ++e) {
            img::Image ref = make_gradient_image(64, 64);
            builtin::paint_face(ref, img::Box{24, 24, 16, 16}, static_cast<int>(e));
            const fs::path refdir =
                fs::path(fx.profiles_root) / "entities" / kEntities[e].id;
            fs::create_directories(refdir);
            const std::string refpath = (refdir / "reference.ppm").string();
            img::save_pnm(ref, refpath);
            repo.add_from_reference(kEntities[e].id, kEntities[e].display, ref,
                                    "reference.ppm", detector, embedder);
        }
        repo.save(fx.profiles_root);
    }

    fx.plan = std::move(plan);
    return fx;
}

}  // namespace safeforge::testing
