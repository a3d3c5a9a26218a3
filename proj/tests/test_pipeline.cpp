// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "safeforge/error.hpp"
#include "safeforge/manifest.hpp"
#include "safeforge/pipeline.hpp"
#include "safeforge/dfe.hpp"
#include "safeforge/generation.hpp"
#include "safeforge/subjects.hpp"
#include "support/fixtures.hpp"

using namespace safeforge;
namespace fs = std::filesystem;

namespace {

config::PipelineConfig fixture_config(const testing::CorpusFixture& fx,
                                      const std::string& out_root) {
    auto cfg = config::parse_config_text("");
    cfg.manifest = fx.manifest_path;
    cfg.image_root = fx.root;
    cfg.output_root = out_root;
    cfg.ner_dictionary = fx.ner_dict_path;
    cfg.kb_snapshot = fx.kb_path;
    cfg.llm_responses = fx.responses_path;
    cfg.entity_profiles = fx.profiles_root;
    cfg.crop_target = 32;
    cfg.generate.resolution = 32;
    cfg.generate.num_inference_steps = 8;
    cfg.generate.seeds = {42};
    cfg.train.epochs = 1;
    cfg.train.batch_size = 4;
    cfg.train.adapter_rank = 2;
    cfg.train.adapter_alpha = 2.0;
    cfg.train.learning_rate = 1e-3;
    return cfg;
}

}  // namespace

TEST_CASE("stage order violations name the missing prerequisite") {
    const auto root = testing::scratch_dir(fs::temp_directory_path().string(),
                                           "safeforge_dep");
    const auto fx = testing::build_corpus(root + "/corpus", {});
    const auto cfg = fixture_config(fx, root + "/out");

    using pipeline::Stage;
    CHECK_THROWS_WITH_AS(pipeline::run_pipeline({Stage::Subjects}, cfg),
                         doctest::Contains("ingest"), Error);
    CHECK_THROWS_WITH_AS(
        pipeline::run_pipeline({Stage::Ingest, Stage::Condition}, cfg),
        doctest::Contains("subjects"), Error);
}

TEST_CASE("ingest + curate populate verdicts and the work manifest") {
    const auto root = testing::scratch_dir(fs::temp_directory_path().string(),
                                           "safeforge_ic");
    testing::CorpusOptions opt;
    opt.clean_records = 6;
    opt.short_captions = 2;
    opt.excluded_entities = 2;
    opt.noise_images = 2;
    opt.face_images = 1;
    const auto fx = testing::build_corpus(root + "/corpus", opt);
    const auto cfg = fixture_config(fx, root + "/out");

    using pipeline::Stage;
    pipeline::run_pipeline({Stage::Ingest, Stage::Curate}, cfg);

    const auto records = manifest::load(cfg.resolved_work_manifest());
    REQUIRE(records.size() == fx.plan.size());

    std::size_t passing = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto& plan = fx.plan[i];
        if (plan.short_caption) {
            CHECK(r.verdict("min_words") == false);
        }
        if (plan.excluded_entity) {
            CHECK(r.verdict("excluded_entity_types") == false);
        }
        if (plan.noise_image) {
            CHECK(r.verdict("iqa_threshold") == false);
        }
        if (plan.with_face && !plan.entity_record) {
            REQUIRE(r.image.face_boxes.has_value());
            CHECK_FALSE(r.image.face_boxes->empty());
            CHECK(r.verdict("face_free") == false);
        }
        if (r.passed_all_filters()) {
            ++passing;
            CHECK(r.split != manifest::Split::Unassigned);
            CHECK(r.image.curated_path.has_value());
            REQUIRE(r.image.crop_box.has_value());
            CHECK(r.image.crop_box->w == 32);
            CHECK(r.image.crop_box->h == 32);
        }
    }
    CHECK(passing == opt.clean_records);
    CHECK(fs::exists(fs::path(cfg.output_root) / "corpus_stats.json"));
}

TEST_CASE("rerun with unchanged inputs skips every stage") {
    const auto root = testing::scratch_dir(fs::temp_directory_path().string(),
                                           "safeforge_skip");
    const auto fx = testing::build_corpus(root + "/corpus", {});
    const auto cfg = fixture_config(fx, root + "/out");

    using pipeline::Stage;
    const std::vector<Stage> stages = {Stage::Ingest, Stage::Curate,
                                       Stage::Subjects};
    const auto first = pipeline::run_pipeline(stages, cfg);
    for (const auto& o : first.outcomes) CHECK_FALSE(o.skipped);

    const auto second = pipeline::run_pipeline(stages, cfg);
    for (const auto& o : second.outcomes) {
        CHECK_MESSAGE(o.skipped, pipeline::stage_name(o.stage));
    }
}

TEST_CASE("a new checkpoint invalidates a completed generate stage") {
    const auto root = testing::scratch_dir(fs::temp_directory_path().string(),
                                           "safeforge_ckinval");
    testing::CorpusOptions opt;
    opt.clean_records = 6;
    const auto fx = testing::build_corpus(root + "/corpus", opt);
    auto cfg = fixture_config(fx, root + "/out");
    cfg.split_train = 0.5;
    cfg.split_val = 0.25;
    cfg.split_test = 0.25;

    using pipeline::Stage;
    const std::vector<Stage> upto_generate = {Stage::Ingest, Stage::Curate,
                                              Stage::Subjects, Stage::Condition,
                                              Stage::Train, Stage::Generate};
    pipeline::run_pipeline(upto_generate, cfg);

    // Unchanged rerun skips generation.
    auto rerun = pipeline::run_pipeline({Stage::Generate}, cfg);
    CHECK(rerun.outcomes.front().skipped);

    // A retrained checkpoint (config untouched) must re-run generation.
    // Simulate by rewriting the archive with one extra history entry.
    auto ck = dfe::load_checkpoint(cfg.resolved_checkpoint());
    ck.state.reward_history.emplace_back(ck.state.global_step, 0.5);
    dfe::save_checkpoint(ck.state, ck.config, cfg.resolved_checkpoint());
    rerun = pipeline::run_pipeline({Stage::Generate}, cfg);
    CHECK_FALSE(rerun.outcomes.front().skipped);
}

TEST_CASE("rewrite mode produces an instruction sidecar") {
    const auto root = testing::scratch_dir(fs::temp_directory_path().string(),
                                           "safeforge_rewrite");
    const auto fx = testing::build_corpus(root + "/corpus", {});
    auto cfg = fixture_config(fx, root + "/out");
    cfg.subjects_mode = "rewrite";

    using pipeline::Stage;
    pipeline::run_pipeline({Stage::Ingest, Stage::Subjects}, cfg);

    const auto rewrites = subjects::load_rewrites(cfg.resolved_rewrites_sidecar());
    REQUIRE_FALSE(rewrites.empty());
    for (const auto& r : rewrites) {
        CHECK(r.rewrite.rfind("Generate an image", 0) == 0);
    }
}

TEST_CASE("model-free stages are byte-identical across fresh runs") {
    const auto root = testing::scratch_dir(fs::temp_directory_path().string(),
                                           "safeforge_bytes");
    const auto fx = testing::build_corpus(root + "/corpus", {});

    auto read_file = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };

    std::string manifests[2];
    for (int run = 0; run < 2; ++run) {
        auto cfg = fixture_config(fx, root + "/out" + std::to_string(run));
        using pipeline::Stage;
        pipeline::run_pipeline({Stage::Ingest, Stage::Curate, Stage::Subjects},
                               cfg);
        manifests[run] = read_file(cfg.resolved_work_manifest());
        CHECK(manifests[run].size() > 0);
        if (run == 1) {
            CHECK(manifests[0] == manifests[1]);
            CHECK(read_file(cfg.resolved_subjects_sidecar()) ==
                  read_file(fixture_config(fx, root + "/out0")
                                .resolved_subjects_sidecar()));
        }
    }
}

TEST_CASE("evaluate accepts an explicit reference directory") {
    const auto root = testing::scratch_dir(fs::temp_directory_path().string(),
                                           "safeforge_refdir");
    auto cfg = config::parse_config_text("");
    cfg.output_root = root + "/out";
    cfg.generated_dir = root + "/gen";
    cfg.reference_dir = root + "/ref";
    cfg.report_path = root + "/report.jsonl";
    fs::create_directories(cfg.generated_dir);
    fs::create_directories(cfg.reference_dir);
    fs::create_directories(cfg.output_root);

    // Hand-built manifest, provenance, generated and reference images.
    std::vector<manifest::Record> records;
    std::ofstream prov(fs::path(cfg.generated_dir) / "generation_manifest.jsonl");
    for (int i = 0; i < 3; ++i) {
        manifest::Record r;
        r.id = "rr" + std::to_string(i);
        r.caption = "reference image number " + std::to_string(i) + " here";
        records.push_back(r);
        img::save_pnm(testing::make_structured_image(16, 16, 50 + static_cast<std::uint64_t>(i)),
                      (fs::path(cfg.generated_dir) / (r.id + "_42.ppm")).string());
        img::save_pnm(testing::make_structured_image(16, 16, 80 + static_cast<std::uint64_t>(i)),
                      (fs::path(cfg.reference_dir) / (r.id + ".ppm")).string());
        gen::ProvenanceRow row;
        row.record_id = r.id;
        row.seed = 42;
        row.mode = "base";
        row.checkpoint_hash = "none";
        row.guidance_scale = 7.5;
        row.num_inference_steps = 10;
        row.resolution = 16;
        row.image_file = r.id + "_42.ppm";
        prov << gen::provenance_to_json_line(row) << "\n";
    }
    prov.close();
    manifest::save(records, cfg.resolved_work_manifest());

    const auto report = pipeline::stage_evaluate(cfg);
    CHECK(report.sample_count == 3);
    CHECK(report.fid.has_value());
    CHECK(report.image_reward_mean.has_value());
    CHECK(fs::exists(cfg.report_path));
}

TEST_CASE("an upstream change invalidates downstream stages") {
    const auto root = testing::scratch_dir(fs::temp_directory_path().string(),
                                           "safeforge_inval");
    const auto fx = testing::build_corpus(root + "/corpus", {});
    const auto cfg = fixture_config(fx, root + "/out");

    using pipeline::Stage;
    const std::vector<Stage> stages = {Stage::Ingest, Stage::Curate,
                                       Stage::Subjects};
    pipeline::run_pipeline(stages, cfg);

    // Touch the raw manifest: append a fresh record.
    {
        manifest::Record extra;
        extra.id = "extra0";
        extra.caption = "an extra bakery fills the canal street with banners";
        extra.image.path = fx.plan.front().id + ".ppm";  // reuse an image
        extra.image.path = "images/" + fx.plan.front().id + ".ppm";
        std::ofstream out(fx.manifest_path, std::ios::app);
        out << manifest::to_json_line(extra) << "\n";
    }

    const auto rerun = pipeline::run_pipeline(stages, cfg);
    for (const auto& o : rerun.outcomes) {
        CHECK_MESSAGE(!o.skipped, pipeline::stage_name(o.stage));
    }
}
