// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "safeforge/dfe.hpp"
#include "safeforge/generation.hpp"

namespace safeforge::config {

// Flat key=value configuration. Every key has a documented default; unknown
// keys are rejected and all violations are reported together.
struct PipelineConfig {
    // paths
    std::string manifest = "manifest.jsonl";
    std::string image_root = ".";
    std::string output_root = "out";
    std::string cache_dir;  // empty -> SAFE_CACHE_DIR or <output_root>/cache
    std::string kb_snapshot;
    std::string entity_profiles;   // empty -> <output_root>/profiles
    std::string ner_dictionary;
    std::string llm_responses;     // replay file for the offline client
    std::string subjects_sidecar;  // empty -> <output_root>/subjects.jsonl
    std::string rewrites_sidecar;  // empty -> <output_root>/rewrites.jsonl
    std::string checkpoint;        // empty -> <output_root>/dfe_checkpoint.bin
    std::string generated_dir;     // empty -> <output_root>/generated
    std::string reference_dir;     // empty -> curated images from the manifest
    std::string report_path;       // empty -> <output_root>/report.jsonl

    // model ids
    std::string text_encoder_id = "tiny";
    std::string backbone_id = "tiny";
    std::string reward_id = "tiny-alignment";
    std::string preference_id = "tiny-preference";
    std::string iqa_id = "tiny";
    std::string detector_id = "tiny";
    std::string recognizer_id = "tiny";
    std::string llm_id = "replay";
    std::string feature_extractor_id = "tiny";
    std::string ner_id = "gazetteer";
    std::string linker_id = "alias";
    std::string sentence_sim_id = "token-overlap";

    // thresholds
    double iqa_threshold = 0.3;
    std::size_t min_words = 6;
    std::vector<std::string> excluded_entities = {"PERSON", "GPE", "LOC",
                                                  "WORK_OF_ART", "ORG"};
    double min_similarity = 0.5;       // face verification
    double cluster_min_similarity = 0.5;
    std::size_t min_samples = 43;
    double face_min_confidence = 0.5;
    bool face_flag = true;
    int crop_target = 512;
    std::vector<std::string> taxonomy;

    // splits
    double split_train = 0.9;
    double split_val = 0.05;
    double split_test = 0.05;

    // subjects
    std::string subjects_template = "structured-json";
    std::string subjects_mode = "subjects";  // subjects | rewrite

    // Rescale conditioned sequences to preserve the mean (ablation only).
    bool renormalize = false;

    std::uint64_t seed = 42;

    dfe::TrainConfig train;
    gen::GenerationConfig generate;

    // Resolved paths with output_root defaults applied. The raw input
    // manifest is never rewritten; stages evolve a working copy under
    // output_root.
    std::string resolved_work_manifest() const;
    std::string resolved_cache_dir() const;
    std::string resolved_subjects_sidecar() const;
    std::string resolved_rewrites_sidecar() const;
    std::string resolved_checkpoint() const;
    std::string resolved_generated_dir() const;
    std::string resolved_report_path() const;
    std::string resolved_entity_profiles() const;
};

// Parses and validates; an empty file yields the full default config.
// Violations are aggregated into one Error("config_invalid") listing every
// offending key.
PipelineConfig validate_config(const std::string& path);

PipelineConfig parse_config_text(const std::string& text);

// Key=value dump of every setting; re-validating the emitted text
// reproduces the config exactly.
std::string emit_config(const PipelineConfig& config);

}  // namespace safeforge::config
