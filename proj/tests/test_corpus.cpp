// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <set>

#include "safeforge/builtin_models.hpp"
#include "safeforge/corpus.hpp"
#include "safeforge/error.hpp"
#include "safeforge/hash.hpp"
#include "safeforge/manifest.hpp"
#include "safeforge/text.hpp"

using namespace safeforge;

namespace {

manifest::Record make_record(const std::string& id, const std::string& caption) {
    manifest::Record r;
    r.id = id;
    r.caption = caption;
    return r;
}

const std::set<std::string> kExcluded = {"PERSON", "GPE", "LOC", "WORK_OF_ART",
                                         "ORG"};

}  // namespace

TEST_CASE("filter_caption length rule") {
    auto r = make_record("a", "one two three four five");
    CHECK_FALSE(corpus::filter_caption(r, 6, kExcluded));
    CHECK(r.verdict("min_words") == false);

    auto ok = make_record(
        "b", "The school offers clothing, including shoes, to its students.");
    CHECK(corpus::filter_caption(ok, 6, kExcluded));
    CHECK(ok.token_count == 9);
    CHECK(ok.passed_all_filters());
}

TEST_CASE("filter_caption excluded entity types") {
    auto r = make_record("c", "Obama awards the Medal of Honor today");
    r.entity_mentions.push_back({"Obama", "PERSON", 0, 5});
    CHECK_FALSE(corpus::filter_caption(r, 6, kExcluded));
    CHECK(r.verdict("excluded_entity_types") == false);
    CHECK(r.verdict("min_words") == true);

    // The entity-subset path supplies an empty exclusion set.
    auto entity_path = make_record("d", "Obama awards the Medal of Honor today");
    entity_path.entity_mentions.push_back({"Obama", "PERSON", 0, 5});
    CHECK(corpus::filter_caption(entity_path, 6, {}));
}

TEST_CASE("filter_caption is idempotent on passing records") {
    auto r = make_record("e", "a sunny afternoon on the harbor pier today");
    CHECK(corpus::filter_caption(r, 6, kExcluded));
    const auto count = r.filter_verdicts.size();
    CHECK(corpus::filter_caption(r, 6, kExcluded));
    CHECK(r.filter_verdicts.size() == count);  // verdicts updated, not duplicated
    CHECK(r.passed_all_filters());
}

TEST_CASE("filter_caption flags malformed text as untokenizable") {
    auto r = make_record("f", "bad \xff\xfe bytes in this caption text here");
    CHECK_FALSE(corpus::filter_caption(r, 6, kExcluded));
    CHECK(r.verdict("untokenizable") == false);
}

TEST_CASE("tag_entities via gazetteer and provided annotations") {
    builtin::GazetteerNer ner;
    ner.add("Obama", "PERSON");
    ner.add("Medal of Honor", "WORK_OF_ART");

    auto r = make_record("g", "Obama awards Medal of Honor");
    corpus::tag_entities(r, &ner);
    REQUIRE(r.entity_mentions.size() == 2);
    CHECK(r.entity_mentions[0].surface == "Obama");
    CHECK(r.entity_mentions[0].type == "PERSON");
    CHECK(r.entity_mentions[1].surface == "Medal of Honor");

    auto none = make_record("h", "a quiet street with yellow bicycles");
    corpus::tag_entities(none, &ner);
    CHECK(none.entity_mentions.empty());

    // Source-provided annotations win.
    auto provided = make_record("i", "Obama awards Medal of Honor");
    provided.mentions_provided = true;
    provided.entity_mentions.push_back({"Honor", "ORG", 22, 27});
    corpus::tag_entities(provided, &ner);
    REQUIRE(provided.entity_mentions.size() == 1);
    CHECK(provided.entity_mentions[0].type == "ORG");

    CHECK_THROWS_WITH_AS(corpus::tag_entities(r, nullptr),
                         doctest::Contains("ner_backend_unavailable"), Error);
}

TEST_CASE("tag_entities drops invalid provided annotations") {
    auto r = make_record("prov", "Obama visits Lisbon this autumn");
    r.mentions_provided = true;
    r.entity_mentions = {
        {"Obama", "PERSON", 0, 5},
        {"visits Lisbon", "GPE", 3, 16},  // overlaps the first mention
        {"Lisbon", "GPE", 13, 19},
        {"autumn", "LOC", 100, 106},  // out of bounds
        {"", "ORG", 7, 7},            // empty span
    };
    corpus::tag_entities(r, nullptr);  // no recognizer needed for provided
    REQUIRE(r.entity_mentions.size() == 2);
    CHECK(r.entity_mentions[0].surface == "Obama");
    CHECK(r.entity_mentions[1].surface == "Lisbon");
    CHECK(r.has_verdict("invalid_mentions_dropped"));
}

TEST_CASE("tag_entities hand-labeled fixture spans do not overlap") {
    builtin::GazetteerNer ner;
    ner.add("Mara Voss", "PERSON");
    ner.add("Lisbon", "GPE");
    const char* captions[] = {
        "Mara Voss arrives in Lisbon for the summit",
        "The Lisbon waterfront at dusk",
        "Mara Voss speaks; Lisbon listens; Mara Voss waves",
    };
    for (const auto* c : captions) {
        auto r = make_record("x", c);
        corpus::tag_entities(r, &ner);
        for (std::size_t i = 0; i < r.entity_mentions.size(); ++i) {
            const auto& m = r.entity_mentions[i];
            CHECK(m.begin < m.end);
            CHECK(m.end <= r.caption.size());
            CHECK(r.caption.substr(m.begin, m.end - m.begin) == m.surface);
            if (i > 0) CHECK(r.entity_mentions[i - 1].end <= m.begin);
        }
    }
}

TEST_CASE("compute_corpus_stats hand-countable") {
    std::vector<manifest::Record> rs = {make_record("1", "a a"),
                                        make_record("2", "a b c")};
    const auto stats = corpus::compute_corpus_stats(rs);
    CHECK(stats.unique_tokens == 3);
    CHECK(stats.mean_caption_length == doctest::Approx(2.5));
    CHECK(stats.sample_count == 2);
}

TEST_CASE("compute_corpus_stats constant-length corpus") {
    std::vector<manifest::Record> rs;
    for (int i = 0; i < 100; ++i) {
        rs.push_back(make_record(std::to_string(i),
                                 "one two three four five six seven eight nine ten"));
    }
    const auto stats = corpus::compute_corpus_stats(rs);
    CHECK(stats.mean_caption_length == doctest::Approx(10.0));
    CHECK(stats.stddev_caption_length == doctest::Approx(0.0));
}

TEST_CASE("compute_corpus_stats matches a naive two-pass recount") {
    DetRng rng(99);
    const char* words[] = {"river", "Rivers", "stone", "stones", "bridge",
                           "light", "lights", "city",  "cities", "walk"};
    std::vector<manifest::Record> rs;
    for (int i = 0; i < 1000; ++i) {
        std::string caption;
        const int n = static_cast<int>(rng.next_int(3, 18));
        for (int k = 0; k < n; ++k) {
            if (!caption.empty()) caption += ' ';
            caption += words[rng.next_int(0, 9)];
        }
        rs.push_back(make_record(std::to_string(i), caption));
    }
    const auto stats = corpus::compute_corpus_stats(rs);

    // Independent recount: two explicit passes, set-based vocabulary.
    std::set<std::string> vocab;
    std::vector<double> lengths;
    for (const auto& r : rs) {
        const auto toks = text::word_tokens(r.caption);
        lengths.push_back(static_cast<double>(toks.size()));
        for (const auto& t : toks) vocab.insert(text::lemmatize(t));
    }
    double mean = 0.0;
    for (const double l : lengths) mean += l;
    mean /= static_cast<double>(lengths.size());
    double var = 0.0;
    for (const double l : lengths) var += (l - mean) * (l - mean);
    var /= static_cast<double>(lengths.size());

    CHECK(stats.unique_tokens == vocab.size());
    CHECK(stats.mean_caption_length == doctest::Approx(mean).epsilon(1e-12));
    CHECK(stats.stddev_caption_length ==
          doctest::Approx(std::sqrt(var)).epsilon(1e-9));

    std::vector<manifest::Record> empty;
    CHECK_THROWS_WITH_AS(corpus::compute_corpus_stats(empty),
                         doctest::Contains("empty_corpus"), Error);
}

TEST_CASE("cluster_categories") {
    builtin::TokenOverlapSimilarity sim;
    std::vector<std::string> taxonomy = {"politics", "sports", "technology"};

    std::vector<manifest::Record> rs;
    rs.push_back(make_record("1", "caption"));
    rs.back().article_category_raw = "sports";
    rs.push_back(make_record("2", "caption"));
    rs.back().article_category_raw = "sports column weekly";
    rs.push_back(make_record("3", "caption"));
    rs.back().article_category_raw = "gardening";

    corpus::cluster_categories(rs, taxonomy, &sim, 0.5);
    CHECK(rs[0].article_category_unified == "sports");  // exact match, sim 1
    CHECK(rs[1].article_category_unified == "sports");  // partial overlap >= 0.5
    CHECK_FALSE(rs[2].article_category_unified.has_value());

    // Unavailable model leaves records unlabeled with a warning verdict.
    corpus::cluster_categories(rs, taxonomy, nullptr, 0.5);
    for (const auto& r : rs) {
        CHECK_FALSE(r.article_category_unified.has_value());
        CHECK(r.verdict("category_model_unavailable") == false);
    }
}

TEST_CASE("manifest records round trip with every column populated") {
    manifest::Record r;
    r.id = "rt1";
    r.source = "synthetic";
    r.caption = "Obama visits the harbor \xc3\xa9clair stand";
    r.article_category_raw = "local news";
    r.article_category_unified = "politics";
    r.entity_mentions = {{"Obama", "PERSON", 0, 5}};
    r.mentions_provided = true;
    r.token_count = 7;
    r.split = manifest::Split::Val;
    r.filter_verdicts = {{"min_words", true}, {"iqa_threshold", false}};
    r.image.path = "images/rt1.ppm";
    r.image.width = 64;
    r.image.height = 48;
    r.image.crop_box = img::Box{4, 0, 32, 32};
    r.image.curated_path = "curated/rt1.ppm";
    r.image.iqa_score = 0.42;
    r.image.face_boxes = {{img::Box{1, 2, 10, 12}, 0.9}};
    r.image.quality_pass = true;
    r.grounding.mentions = {{"Obama", "Q1", 1.0}};
    r.grounding.verified = true;
    r.grounding.verify_similarity = 0.87;
    r.grounding.verified_entity_id = "Q1";

    const auto line = manifest::to_json_line(r);
    const auto back = manifest::from_json_line(line);
    CHECK(manifest::to_json_line(back) == line);
    CHECK(back.caption == r.caption);
    CHECK(back.split == manifest::Split::Val);
    CHECK(back.image.crop_box == r.image.crop_box);
    CHECK(back.image.face_boxes->size() == 1);
    CHECK(back.grounding.verified_entity_id == "Q1");
    CHECK(back.article_category_unified == "politics");
}

TEST_CASE("assign_splits proportions and determinism") {
    auto build = [](int n) {
        std::vector<manifest::Record> rs;
        for (int i = 0; i < n; ++i) {
            rs.push_back(make_record(std::to_string(i), "six words make a caption here"));
        }
        return rs;
    };

    auto rs = build(100);
    corpus::assign_splits(rs, {0.9, 0.05, 0.05}, 42);
    int train = 0, val = 0, test = 0;
    for (const auto& r : rs) {
        if (r.split == manifest::Split::Train) ++train;
        if (r.split == manifest::Split::Val) ++val;
        if (r.split == manifest::Split::Test) ++test;
    }
    CHECK(train == 90);
    CHECK(val == 5);
    CHECK(test == 5);

    auto rs2 = build(100);
    corpus::assign_splits(rs2, {0.9, 0.05, 0.05}, 42);
    for (int i = 0; i < 100; ++i) CHECK(rs[i].split == rs2[i].split);

    // 101 records: every split size within 1 of the ideal, counted directly.
    auto rs3 = build(101);
    corpus::assign_splits(rs3, {0.9, 0.05, 0.05}, 7);
    int c[3] = {0, 0, 0};
    for (const auto& r : rs3) {
        if (r.split == manifest::Split::Train) ++c[0];
        if (r.split == manifest::Split::Val) ++c[1];
        if (r.split == manifest::Split::Test) ++c[2];
    }
    CHECK(c[0] + c[1] + c[2] == 101);
    CHECK(std::abs(c[0] - 0.9 * 101) <= 1.0);
    CHECK(std::abs(c[1] - 0.05 * 101) <= 1.0);
    CHECK(std::abs(c[2] - 0.05 * 101) <= 1.0);

    CHECK_THROWS_WITH_AS(corpus::assign_splits(rs, {0.9, 0.05, 0.05}, 1),
                         doctest::Contains("split_reassignment"), Error);

    auto bad = build(10);
    CHECK_THROWS_WITH_AS(corpus::assign_splits(bad, {0.9, 0.2, 0.05}, 1),
                         doctest::Contains("invalid_split_ratios"), Error);
}
