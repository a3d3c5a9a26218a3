// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "safeforge/builtin_models.hpp"
#include "safeforge/corpus.hpp"
#include "safeforge/curation.hpp"
#include "safeforge/error.hpp"
#include "safeforge/generation.hpp"
#include "safeforge/grounding.hpp"
#include "safeforge/hash.hpp"
#include "safeforge/manifest.hpp"
#include "safeforge/subjects.hpp"

namespace safeforge::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::Ingest: return "ingest";
        case Stage::Curate: return "curate";
        case Stage::Ground: return "ground";
        case Stage::Subjects: return "subjects";
        case Stage::Condition: return "condition";
        case Stage::Train: return "train";
        case Stage::Generate: return "generate";
        case Stage::Evaluate: return "evaluate";
    }
    return "?";
}

Stage stage_from_name(const std::string& name) {
    static const std::map<std::string, Stage> lut = {
        {"ingest", Stage::Ingest},       {"curate", Stage::Curate},
        {"ground", Stage::Ground},       {"subjects", Stage::Subjects},
        {"condition", Stage::Condition}, {"train", Stage::Train},
        {"generate", Stage::Generate},   {"evaluate", Stage::Evaluate},
    };
    const auto it = lut.find(name);
    if (it == lut.end()) throw Error("unknown_stage", name);
    return it->second;
}

std::vector<Stage> stages_from_csv(const std::string& csv) {
    std::vector<Stage> out;
    for (const auto& piece : text::split(csv, ',')) {
        const std::string t = text::trim(piece);
        if (!t.empty()) out.push_back(stage_from_name(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

StageLedger::StageLedger(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        Entry e;
        e.input_hash = j.at("input_hash").get<std::string>();
        if (j.contains("output_hashes")) {
            for (const auto& [k, v] : j["output_hashes"].items()) {
                e.output_hashes[k] = v.get<std::string>();
            }
        }
        entries_[j.at("stage").get<std::string>()] = std::move(e);
    }
}

const StageLedger::Entry* StageLedger::find(Stage s) const {
    const auto it = entries_.find(stage_name(s));
    return it == entries_.end() ? nullptr : &it->second;
}

void StageLedger::record(Stage s, Entry entry) {
    entries_[stage_name(s)] = entry;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error("ledger_write_failed", path_);
    json j;
    j["stage"] = stage_name(s);
    j["input_hash"] = entry.input_hash;
    j["output_hashes"] = entry.output_hashes;
    out << j.dump() << "\n";
}

// ---------------------------------------------------------------------------
// Model wiring
// ---------------------------------------------------------------------------

namespace {

// The "pre-trained" backbone is seeded by a constant so checkpoints stay
// compatible across configs.
constexpr std::uint64_t kBackboneWeightSeed = 0x7777;
constexpr int kModelDim = 16;

std::string hash_of_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "missing";
    std::string buf((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    return hex64(fnv1a64(buf.data(), buf.size()));
}

std::unique_ptr<builtin::TinyTextEncoder> make_encoder(const config::PipelineConfig& cfg) {
    if (cfg.text_encoder_id != "tiny") {
        throw Error("unknown_model", "text encoder '" + cfg.text_encoder_id + "'");
    }
    return std::make_unique<builtin::TinyTextEncoder>();
}

std::unique_ptr<dfe::TinyDenoiser> make_backbone(const config::PipelineConfig& cfg) {
    if (cfg.backbone_id != "tiny") {
        throw Error("unknown_model", "backbone '" + cfg.backbone_id + "'");
    }
    return std::make_unique<dfe::TinyDenoiser>(
        3, kModelDim, builtin::TinyTextEncoder::kDim, kBackboneWeightSeed);
}

std::unique_ptr<models::IqaModel> make_iqa(const config::PipelineConfig& cfg) {
    if (cfg.iqa_id == "none") return nullptr;
    if (cfg.iqa_id != "tiny") throw Error("unknown_model", "iqa '" + cfg.iqa_id + "'");
    return std::make_unique<builtin::TinyIqa>();
}

std::unique_ptr<models::FaceDetector> make_detector(const config::PipelineConfig& cfg) {
    if (cfg.detector_id == "none") return nullptr;
    if (cfg.detector_id != "tiny") {
        throw Error("unknown_model", "detector '" + cfg.detector_id + "'");
    }
    return std::make_unique<builtin::TinyFaceDetector>();
}

std::unique_ptr<models::FaceEmbedder> make_embedder(const config::PipelineConfig& cfg) {
    if (cfg.recognizer_id == "none") return nullptr;
    if (cfg.recognizer_id != "tiny") {
        throw Error("unknown_model", "recognizer '" + cfg.recognizer_id + "'");
    }
    return std::make_unique<builtin::TinyFaceEmbedder>();
}

std::unique_ptr<models::NerBackend> make_ner(const config::PipelineConfig& cfg) {
    if (cfg.ner_id == "none") return nullptr;
    if (cfg.ner_id != "gazetteer") {
        throw Error("unknown_model", "ner '" + cfg.ner_id + "'");
    }
    if (cfg.ner_dictionary.empty()) {
        return std::make_unique<builtin::GazetteerNer>();
    }
    return std::make_unique<builtin::GazetteerNer>(cfg.ner_dictionary);
}

std::unique_ptr<models::LlmClient> make_llm(const config::PipelineConfig& cfg) {
    if (cfg.llm_id == "replay") {
        return std::make_unique<builtin::ReplayLlmClient>(cfg.llm_responses);
    }
    if (cfg.llm_id.rfind("http:", 0) == 0) {
        // http:HOST:PORT/MODEL
        const std::string rest = cfg.llm_id.substr(5);
        const auto slash = rest.find('/');
        const auto colon = rest.find(':');
        if (slash == std::string::npos || colon == std::string::npos ||
            colon > slash) {
            throw Error("unknown_model", "llm spec '" + cfg.llm_id + "'");
        }
        const std::string host = rest.substr(0, colon);
        const int port = std::stoi(rest.substr(colon + 1, slash - colon - 1));
        const std::string model = rest.substr(slash + 1);
        auto inner = std::make_shared<builtin::HttpChatClient>(host, port, model);
        const fs::path cache_dir = cfg.resolved_cache_dir();
        fs::create_directories(cache_dir);
        return std::make_unique<builtin::CachingLlmClient>(
            inner, (cache_dir / "llm_cache.jsonl").string());
    }
    throw Error("unknown_model", "llm '" + cfg.llm_id + "'");
}

std::vector<std::string> default_taxonomy() {
    return {"politics", "sports",  "technology", "arts",
            "business", "science", "travel",     "food"};
}

bool is_entity_record(const manifest::Record& r) {
    for (const auto& m : r.entity_mentions) {
        if (m.type == "PERSON") return true;
    }
    return false;
}

// Records the subject/conditioning stages operate on: the non-entity subset
// plus the entity path (evaluated separately but generated with the same
// conditioning).
bool subject_eligible(const manifest::Record& r) {
    return r.passed_all_filters() || is_entity_record(r);
}

}  // namespace

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

void stage_ingest(const config::PipelineConfig& cfg) {
    auto records = manifest::load(cfg.manifest);
    const auto ner = make_ner(cfg);
    const builtin::TokenOverlapSimilarity sim;

    std::set<std::string> excluded(cfg.excluded_entities.begin(),
                                   cfg.excluded_entities.end());
    for (auto& r : records) {
        corpus::tag_entities(r, ner.get());
        corpus::filter_caption(r, cfg.min_words, excluded);
    }

    const auto taxonomy = cfg.taxonomy.empty() ? default_taxonomy() : cfg.taxonomy;
    corpus::cluster_categories(records, taxonomy, &sim, cfg.cluster_min_similarity);

    // Corpus statistics over the caption-passing records. Split assignment
    // waits until curate so the 90/5/5 partition covers the final retained
    // set (image gates included).
    std::vector<manifest::Record> passing;
    for (const auto& r : records) {
        if (r.passed_all_filters()) passing.push_back(r);
    }
    fs::create_directories(cfg.output_root);
    if (!passing.empty()) {
        const auto stats = corpus::compute_corpus_stats(passing);
        json js;
        js["unique_tokens"] = stats.unique_tokens;
        js["mean_caption_length"] = stats.mean_caption_length;
        js["stddev_caption_length"] = stats.stddev_caption_length;
        js["sample_count"] = stats.sample_count;
        std::ofstream out(fs::path(cfg.output_root) / "corpus_stats.json");
        out << js.dump(2) << "\n";
    }

    manifest::save(records, cfg.resolved_work_manifest());
}

void stage_curate(const config::PipelineConfig& cfg) {
    auto records = manifest::load(cfg.resolved_work_manifest());
    const auto iqa = make_iqa(cfg);
    const auto detector = make_detector(cfg);

    const fs::path curated_dir = fs::path(cfg.output_root) / "curated";
    fs::create_directories(curated_dir);

    for (auto& r : records) {
        // Both the non-entity and entity paths get curated images; only the
        // caption-length gate applies before image work.
        if (!r.verdict("min_words").value_or(false)) continue;
        if (r.image.path.empty()) continue;

        const img::Image raw =
            img::load_pnm((fs::path(cfg.image_root) / r.image.path).string());
        r.image.width = raw.width;
        r.image.height = raw.height;

        const img::Box box = curation::entropy_crop(raw, cfg.crop_target);
        r.image.crop_box = box;
        const img::Image resized = img::resize_short_side(raw, cfg.crop_target);
        const img::Image cropped = img::crop(resized, box);
        const std::string curated_name = r.id + ".ppm";
        img::save_pnm(img::to_rgb(cropped), (curated_dir / curated_name).string());
        r.image.curated_path = (fs::path("curated") / curated_name).string();

        const double score = curation::score_quality(cropped, iqa.get());
        r.image.iqa_score = score;
        const bool quality = curation::quality_gate(score, cfg.iqa_threshold);
        r.image.quality_pass = quality;
        r.set_verdict("iqa_threshold", quality);

        if (cfg.face_flag) {
            const auto faces = curation::flag_faces(cropped, detector.get(),
                                                    cfg.face_min_confidence);
            r.image.face_boxes = faces;
            // Faces disqualify the non-entity subset only; the entity path
            // needs them.
            r.set_verdict("face_free",
                          is_entity_record(r) ? true : faces.empty());
        }
    }

    // Every filter has now spoken: partition the retained set.
    std::vector<manifest::Record> retained;
    for (const auto& r : records) {
        if (r.passed_all_filters() && r.split == manifest::Split::Unassigned) {
            retained.push_back(r);
        }
    }
    if (!retained.empty()) {
        corpus::assign_splits(retained,
                              {cfg.split_train, cfg.split_val, cfg.split_test},
                              cfg.seed);
        std::map<std::string, manifest::Split> split_by_id;
        for (const auto& r : retained) split_by_id[r.id] = r.split;
        for (auto& r : records) {
            const auto it = split_by_id.find(r.id);
            if (it != split_by_id.end()) r.split = it->second;
        }
    }

    manifest::save(records, cfg.resolved_work_manifest());
}

void stage_ground(const config::PipelineConfig& cfg) {
    auto records = manifest::load(cfg.resolved_work_manifest());
    if (cfg.kb_snapshot.empty()) {
        throw Error("kb_snapshot_missing", "paths.kb_snapshot is not set");
    }
    const builtin::AliasLinker linker(cfg.kb_snapshot);
    const auto detector = make_detector(cfg);
    const auto embedder = make_embedder(cfg);
    if (!detector || !embedder) throw Error("detector_unavailable");

    grounding::ProfileRepository repo;
    const std::string profile_root = cfg.resolved_entity_profiles();
    if (fs::exists(fs::path(profile_root) / "entities")) {
        repo = grounding::ProfileRepository::load(profile_root);
    }

    for (auto& r : records) {
        if (r.entity_mentions.empty()) continue;
        r.grounding.mentions = grounding::link_mentions(r, &linker);
        if (!r.image.curated_path || !r.image.quality_pass.value_or(false)) {
            continue;
        }

        const grounding::EntityProfile* profile = nullptr;
        for (const auto& m : r.grounding.mentions) {
            if (const auto* p = repo.find(m.entity_id)) {
                profile = p;
                break;
            }
        }
        if (profile == nullptr) continue;

        const img::Image curated = img::load_pnm(
            (fs::path(cfg.output_root) / *r.image.curated_path).string());
        const auto verdict = grounding::verify_entity_in_image(
            curated, *profile, *detector, *embedder, cfg.min_similarity);
        r.grounding.verified = verdict.present;
        if (verdict.similarity) r.grounding.verify_similarity = verdict.similarity;
        if (verdict.present) r.grounding.verified_entity_id = profile->entity_id;
    }

    const auto subset = grounding::build_entity_subset(records, repo, cfg.min_samples);
    fs::create_directories(cfg.output_root);
    manifest::save(subset.records,
                   (fs::path(cfg.output_root) / "entity_subset.jsonl").string());
    {
        json counts;
        for (const auto& [id, n] : subset.per_entity_counts) counts[id] = n;
        std::ofstream out(fs::path(cfg.output_root) / "entity_counts.json");
        out << counts.dump(2) << "\n";
    }

    manifest::save(records, cfg.resolved_work_manifest());
}

void stage_subjects(const config::PipelineConfig& cfg) {
    const auto records = manifest::load(cfg.resolved_work_manifest());
    const auto llm = make_llm(cfg);

    if (cfg.subjects_mode == "rewrite") {
        std::vector<subjects::RewriteRecord> rewrites;
        for (const auto& r : records) {
            if (!subject_eligible(r)) continue;
            rewrites.push_back(
                {r.id, subjects::rewrite_caption(r.caption, *llm), llm->id()});
        }
        fs::create_directories(cfg.output_root);
        subjects::save_rewrites(rewrites, cfg.resolved_rewrites_sidecar());
        return;
    }

    const subjects::PromptTemplate tpl =
        cfg.subjects_template == "list-style"
            ? subjects::PromptTemplate::list_style()
            : subjects::PromptTemplate::structured_json();
    std::vector<subjects::SubjectAnnotation> annotations;
    for (const auto& r : records) {
        if (!subject_eligible(r)) continue;
        annotations.push_back(
            subjects::extract_subjects(r.id, r.caption, tpl, *llm));
    }
    fs::create_directories(cfg.output_root);
    subjects::save_sidecar(annotations, cfg.resolved_subjects_sidecar());
}

void stage_condition(const config::PipelineConfig& cfg) {
    const auto records = manifest::load(cfg.resolved_work_manifest());
    const auto annotations = subjects::load_sidecar(cfg.resolved_subjects_sidecar());
    const auto encoder = make_encoder(cfg);

    std::map<std::string, const subjects::SubjectAnnotation*> by_id;
    for (const auto& a : annotations) by_id[a.record_id] = &a;

    const std::string base =
        (fs::path(cfg.output_root) / "conditioned_embeddings").string();
    std::error_code ec;
    fs::remove(base + ".bin", ec);
    fs::remove(base + ".index.jsonl", ec);
    fs::create_directories(cfg.output_root);
    conditioning::EmbeddingCache cache(base);

    const double beta =
        conditioning::scale_exponent_to_beta(cfg.generate.scale_exp);
    for (const auto& r : records) {
        const auto it = by_id.find(r.id);
        if (it == by_id.end()) continue;
        auto seq = conditioning::encode_caption(r.caption, *encoder);
        if (!it->second->fallback_used) {
            const auto spans = conditioning::align_phrases_to_tokens(
                r.caption, it->second->phrases(), *encoder);
            const auto weights = conditioning::build_weight_vector(
                seq.token_count(), spans, beta, &seq.special);
            seq = conditioning::condition_embeddings(seq, weights, cfg.renormalize);
        }
        cache.put(r.id, seq.vectors);
    }
}

void stage_train(const config::PipelineConfig& cfg) {
    const auto records = manifest::load(cfg.resolved_work_manifest());
    const auto annotations = subjects::load_sidecar(cfg.resolved_subjects_sidecar());
    const auto encoder = make_encoder(cfg);
    const auto backbone = make_backbone(cfg);
    const builtin::TinyAutoencoder autoencoder;

    std::map<std::string, const subjects::SubjectAnnotation*> by_id;
    for (const auto& a : annotations) by_id[a.record_id] = &a;

    const double beta = conditioning::scale_exponent_to_beta(cfg.train.scale_exp);
    std::vector<dfe::TrainSample> samples;
    for (const auto& r : records) {
        if (r.split != manifest::Split::Train) continue;
        if (!r.image.curated_path || !r.image.quality_pass.value_or(false)) continue;
        dfe::TrainSample s;
        s.image = img::load_pnm(
            (fs::path(cfg.output_root) / *r.image.curated_path).string());
        s.caption = r.caption;
        auto seq = conditioning::encode_caption(r.caption, *encoder);
        const auto it = by_id.find(r.id);
        if (it != by_id.end() && !it->second->fallback_used) {
            const auto spans = conditioning::align_phrases_to_tokens(
                r.caption, it->second->phrases(), *encoder);
            const auto weights = conditioning::build_weight_vector(
                seq.token_count(), spans, beta, &seq.special);
            seq = conditioning::condition_embeddings(seq, weights);
        }
        s.context = seq.vectors;
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw Error("empty_dataset", "no trainable records");

    const dfe::SyntheticLatentReward reward;
    const dfe::DfeTrainer trainer(*backbone, autoencoder, reward, cfg.train);
    dfe::TrainState state = trainer.attach();
    const std::string ckpt = cfg.resolved_checkpoint();
    if (fs::exists(ckpt)) {
        auto saved = dfe::load_checkpoint(ckpt);
        if (saved.state.frozen_base_fingerprint == backbone->base_fingerprint()) {
            state = std::move(saved.state);
        }
    }
    trainer.run_training(state, samples, ckpt);
}

void stage_generate(const config::PipelineConfig& cfg) {
    const auto records = manifest::load(cfg.resolved_work_manifest());
    const auto encoder = make_encoder(cfg);
    const auto backbone = make_backbone(cfg);
    const builtin::TinyAutoencoder autoencoder;
    const sched::NoiseScheduler scheduler(cfg.train.scheduler_timesteps);

    // Non-entity test split plus the verified entity set (test-only).
    std::vector<manifest::Record> to_generate;
    for (const auto& r : records) {
        if (!r.image.curated_path) continue;
        const bool non_entity_test =
            r.split == manifest::Split::Test && r.passed_all_filters();
        const bool entity_verified = r.grounding.verified.value_or(false);
        if (non_entity_test || entity_verified) to_generate.push_back(r);
    }

    std::vector<subjects::SubjectAnnotation> annotations;
    if (fs::exists(cfg.resolved_subjects_sidecar())) {
        annotations = subjects::load_sidecar(cfg.resolved_subjects_sidecar());
    }
    std::vector<subjects::RewriteRecord> rewrites;
    if (fs::exists(cfg.resolved_rewrites_sidecar())) {
        rewrites = subjects::load_rewrites(cfg.resolved_rewrites_sidecar());
    }

    gen::GenerationConfig gc = cfg.generate;
    dfe::AdapterSet adapters;
    gen::GenModels models{encoder.get(), backbone.get(), &autoencoder,
                          &scheduler, nullptr};
    if (!gc.checkpoint && fs::exists(cfg.resolved_checkpoint())) {
        gc.checkpoint = cfg.resolved_checkpoint();
    }
    if (gc.checkpoint) {
        adapters = gen::load_generation_adapters(*gc.checkpoint, *backbone);
        models.adapters = &adapters;
    }

    const auto result = gen::batch_generate(
        to_generate, annotations, rewrites, gc, models, cfg.resolved_generated_dir(),
        (fs::path(cfg.resolved_generated_dir()) / "generation_manifest.jsonl").string());
    if (!result.errors.empty()) {
        std::string detail;
        for (const auto& e : result.errors) {
            detail += e.record_id + " (" + e.message + ") ";
        }
        throw Error("generation_errors", detail);
    }
}

metrics::EvalReport stage_evaluate(const config::PipelineConfig& cfg) {
    const auto records = manifest::load(cfg.resolved_work_manifest());
    const builtin::TinyFeatureExtractor extractor;
    const builtin::TinyAlignmentScorer reward;
    const builtin::TinyPreferenceScorer preference;
    const auto detector = make_detector(cfg);
    const auto embedder = make_embedder(cfg);

    const fs::path gen_dir = cfg.resolved_generated_dir();
    const std::string prov_path =
        (gen_dir / "generation_manifest.jsonl").string();
    std::ifstream prov(prov_path);
    if (!prov) throw Error("provenance_missing", prov_path);

    std::map<std::string, const manifest::Record*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;

    grounding::ProfileRepository repo;
    const std::string profile_root = cfg.resolved_entity_profiles();
    const bool entity_mode = fs::exists(fs::path(profile_root) / "entities");
    if (entity_mode) repo = grounding::ProfileRepository::load(profile_root);

    std::vector<img::Image> generated;
    std::vector<img::Image> reference;
    std::vector<std::string> captions;
    std::vector<img::Image> entity_images;
    std::vector<const grounding::EntityProfile*> entity_profiles;
    std::set<std::uint64_t> seeds;
    std::string checkpoint_hash = "none";

    std::string line;
    while (std::getline(prov, line)) {
        if (line.empty()) continue;
        const auto row = gen::provenance_from_json_line(line);
        const auto it = by_id.find(row.record_id);
        if (it == by_id.end()) continue;
        fs::path ref_path;
        if (!cfg.reference_dir.empty()) {
            ref_path = fs::path(cfg.reference_dir) / (row.record_id + ".ppm");
        } else if (it->second->image.curated_path) {
            ref_path = fs::path(cfg.output_root) / *it->second->image.curated_path;
        }
        if (ref_path.empty() || !fs::exists(ref_path)) continue;
        img::Image gen_img = img::load_pnm((gen_dir / row.image_file).string());
        reference.push_back(img::load_pnm(ref_path.string()));
        captions.push_back(it->second->caption);
        seeds.insert(row.seed);
        checkpoint_hash = row.checkpoint_hash;
        if (entity_mode && it->second->grounding.verified_entity_id) {
            if (const auto* p =
                    repo.find(*it->second->grounding.verified_entity_id)) {
                entity_images.push_back(gen_img);
                entity_profiles.push_back(p);
            }
        }
        generated.push_back(std::move(gen_img));
    }
    if (generated.empty()) throw Error("no_generated_images");

    metrics::EvalReport report;
    report.sample_count = generated.size();
    report.seeds.assign(seeds.begin(), seeds.end());
    report.provenance["checkpoint_hash"] = checkpoint_hash;
    report.provenance["feature_extractor"] = extractor.id();
    report.provenance["reward_scorer"] = reward.id();
    report.provenance["preference_scorer"] = preference.id();

    if (generated.size() >= 2) {
        const auto fa = metrics::FeatureSet::from_images(generated, extractor);
        const auto fb = metrics::FeatureSet::from_images(reference, extractor);
        report.fid = metrics::frechet_distance(fa, fb);
    }
    report.image_reward_mean =
        metrics::score_alignment(generated, captions, reward).mean;
    report.hps_mean = metrics::score_alignment(generated, captions, preference).mean;

    if (!entity_images.empty() && detector && embedder) {
        const auto em = metrics::entity_metrics(entity_images, entity_profiles,
                                                *detector, *embedder);
        report.detect_accuracy = em.detect_accuracy;
        report.identity_preservation = em.identity_preservation;
    }

    std::ofstream out(cfg.resolved_report_path(), std::ios::app);
    if (!out) throw Error("report_write_failed", cfg.resolved_report_path());
    out << metrics::report_to_json_line(report) << "\n";
    return report;
}

// ---------------------------------------------------------------------------
// run_pipeline
// ---------------------------------------------------------------------------

namespace {

const std::map<Stage, std::vector<Stage>>& stage_dependencies() {
    // Generation and training derive conditioned embeddings from the
    // subjects sidecar directly; the condition stage materializes the
    // reusable cache artifact. The rewrite-baseline path therefore skips
    // condition entirely.
    static const std::map<Stage, std::vector<Stage>> deps = {
        {Stage::Ingest, {}},
        {Stage::Curate, {Stage::Ingest}},
        {Stage::Ground, {Stage::Curate}},
        {Stage::Subjects, {Stage::Ingest}},
        {Stage::Condition, {Stage::Subjects}},
        {Stage::Train, {Stage::Subjects, Stage::Curate}},
        {Stage::Generate, {Stage::Subjects}},
        {Stage::Evaluate, {Stage::Generate}},
    };
    return deps;
}

std::vector<std::string> stage_outputs(Stage s, const config::PipelineConfig& cfg) {
    switch (s) {
        case Stage::Ingest: return {cfg.resolved_work_manifest()};
        case Stage::Curate: return {cfg.resolved_work_manifest()};
        case Stage::Ground:
            return {cfg.resolved_work_manifest(),
                    (fs::path(cfg.output_root) / "entity_subset.jsonl").string()};
        case Stage::Subjects:
            return cfg.subjects_mode == "rewrite"
                       ? std::vector<std::string>{cfg.resolved_rewrites_sidecar()}
                       : std::vector<std::string>{cfg.resolved_subjects_sidecar()};
        case Stage::Condition:
            return {(fs::path(cfg.output_root) / "conditioned_embeddings.index.jsonl")
                        .string()};
        case Stage::Train: return {cfg.resolved_checkpoint()};
        case Stage::Generate:
            return {(fs::path(cfg.resolved_generated_dir()) /
                     "generation_manifest.jsonl")
                        .string()};
        case Stage::Evaluate: return {cfg.resolved_report_path()};
    }
    return {};
}

// Inputs are the stage's config, its private input files, and the recorded
// OUTPUT hashes of its dependencies. Hashing dependency outputs (rather
// than re-hashing shared files) makes an upstream change invalidate every
// downstream stage while a byte-identical rerun skips cleanly.
std::string stage_input_hash(Stage s, const config::PipelineConfig& cfg,
                             const StageLedger& ledger) {
    std::uint64_t h = fnv1a64(stage_name(s));
    h = fnv1a64(config::emit_config(cfg), h);

    std::vector<std::string> inputs;
    switch (s) {
        case Stage::Ingest:
            inputs.push_back(cfg.manifest);
            if (!cfg.ner_dictionary.empty()) inputs.push_back(cfg.ner_dictionary);
            break;
        case Stage::Curate:
            break;
        case Stage::Ground:
            if (!cfg.kb_snapshot.empty()) inputs.push_back(cfg.kb_snapshot);
            break;
        case Stage::Subjects:
            if (!cfg.llm_responses.empty()) inputs.push_back(cfg.llm_responses);
            break;
        case Stage::Generate:
            // A retrained checkpoint must invalidate completed generations.
            inputs.push_back(cfg.resolved_checkpoint());
            break;
        default:
            break;
    }
    for (const auto& path : inputs) {
        h = fnv1a64(path, h);
        h = fnv1a64(hash_of_file(path), h);
    }
    for (const Stage dep : stage_dependencies().at(s)) {
        h = fnv1a64(stage_name(dep), h);
        if (const auto* entry = ledger.find(dep)) {
            h = fnv1a64(entry->input_hash, h);
            for (const auto& [path, hash] : entry->output_hashes) {
                h = fnv1a64(path, h);
                h = fnv1a64(hash, h);
            }
        } else {
            h = fnv1a64("unrun", h);
        }
    }
    return hex64(h);
}

}  // namespace

RunResult run_pipeline(const std::vector<Stage>& stages,
                       const config::PipelineConfig& cfg, std::ostream* log) {
    if (stages.empty()) throw Error("no_stages");
    fs::create_directories(cfg.output_root);
    StageLedger ledger((fs::path(cfg.output_root) / "stage_ledger.jsonl").string());

    std::set<Stage> scheduled;
    for (const Stage s : stages) {
        for (const Stage dep : stage_dependencies().at(s)) {
            if (scheduled.count(dep) == 0 && !ledger.completed(dep)) {
                throw Error("stage_dependency_missing",
                            stage_name(s) + " requires " + stage_name(dep));
            }
        }
        scheduled.insert(s);
    }

    RunResult result;
    for (const Stage s : stages) {
        const std::string input_hash = stage_input_hash(s, cfg, ledger);
        const auto* prev = ledger.find(s);
        bool skip = false;
        if (prev != nullptr && prev->input_hash == input_hash) {
            skip = true;
            const std::string work = cfg.resolved_work_manifest();
            for (const auto& [path, hash] : prev->output_hashes) {
                if (path == work) {
                    // The work manifest is rewritten by later stages; only
                    // its existence is checked here. Lineage changes still
                    // cascade through the dependency entries.
                    if (!fs::exists(path)) {
                        skip = false;
                        break;
                    }
                    continue;
                }
                if (hash_of_file(path) != hash) {
                    skip = false;
                    break;
                }
            }
        }
        if (skip) {
            if (log) *log << "[skip] " << stage_name(s) << "\n";
            result.outcomes.push_back({s, true, "unchanged inputs"});
            continue;
        }

        if (log) *log << "[run ] " << stage_name(s) << "\n";
        switch (s) {
            case Stage::Ingest: stage_ingest(cfg); break;
            case Stage::Curate: stage_curate(cfg); break;
            case Stage::Ground: stage_ground(cfg); break;
            case Stage::Subjects: stage_subjects(cfg); break;
            case Stage::Condition: stage_condition(cfg); break;
            case Stage::Train: stage_train(cfg); break;
            case Stage::Generate: stage_generate(cfg); break;
            case Stage::Evaluate: result.report = stage_evaluate(cfg); break;
        }

        StageLedger::Entry entry;
        entry.input_hash = input_hash;
        for (const auto& out_path : stage_outputs(s, cfg)) {
            entry.output_hashes[out_path] = hash_of_file(out_path);
        }
        ledger.record(s, entry);
        result.outcomes.push_back({s, false, ""});
    }
    return result;
}

}  // namespace safeforge::pipeline
