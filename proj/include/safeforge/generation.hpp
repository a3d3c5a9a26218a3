// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "safeforge/builtin_models.hpp"
#include "safeforge/conditioning.hpp"
#include "safeforge/denoiser.hpp"
#include "safeforge/manifest.hpp"
#include "safeforge/scheduler.hpp"
#include "safeforge/subjects.hpp"

namespace safeforge::gen {

enum class Mode { Base, Conditioned, RewriteBaseline };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct GenerationConfig {
    double guidance_scale = 7.5;
    int num_inference_steps = 100;
    std::vector<std::uint64_t> seeds = {42, 3};
    int resolution = 512;  // square
    Mode mode = Mode::Conditioned;
    int scale_exp = 2;
    std::optional<std::string> checkpoint;

    void validate() const;
};

struct GenModels {
    const conditioning::TextEncoder* encoder = nullptr;
    const dfe::TinyDenoiser* denoiser = nullptr;
    const builtin::TinyAutoencoder* autoencoder = nullptr;
    const sched::NoiseScheduler* scheduler = nullptr;
    const dfe::AdapterSet* adapters = nullptr;  // from a loaded checkpoint
};

// Classifier-free-guided sampling; one image per seed. Deterministic in
// (caption, seed, config, weights, checkpoint).
std::vector<img::Image> generate(const std::string& caption,
                                 const subjects::SubjectAnnotation* annotation,
                                 const std::optional<std::string>& rewrite,
                                 const GenerationConfig& config,
                                 const GenModels& models);

struct ProvenanceRow {
    std::string record_id;
    std::uint64_t seed = 0;
    std::string mode;
    int scale_exp = 0;
    std::string checkpoint_hash;  // "none" when sampling the frozen base
    double guidance_scale = 0.0;
    int num_inference_steps = 0;
    int resolution = 0;
    std::string sampler = "ddim";
    std::string image_file;
};

std::string provenance_to_json_line(const ProvenanceRow& row);
ProvenanceRow provenance_from_json_line(const std::string& line);

struct BatchItemError {
    std::string record_id;
    std::string message;
};

struct BatchResult {
    std::size_t generated = 0;
    std::size_t skipped = 0;
    std::vector<BatchItemError> errors;
};

// One image per (record, seed) into out_dir, named <record_id>_<seed>.ppm.
// Existing outputs whose provenance row matches are skipped; IO failures
// are collected per record without aborting the batch.
BatchResult batch_generate(const std::vector<manifest::Record>& records,
                           const std::vector<subjects::SubjectAnnotation>& annotations,
                           const std::vector<subjects::RewriteRecord>& rewrites,
                           const GenerationConfig& config, const GenModels& models,
                           const std::string& out_dir,
                           const std::string& provenance_path);

// Loads a checkpoint, verifies it against the backbone fingerprint
// (Error("checkpoint_incompatible") on mismatch) and returns the adapters.
dfe::AdapterSet load_generation_adapters(const std::string& checkpoint_path,
                                         const dfe::TinyDenoiser& backbone);

}  // namespace safeforge::gen
