// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
//
// safe-forge: news image-caption curation, subject-conditioned generation
// and evaluation. Each subcommand runs one pipeline stage; `run` sequences
// several with ledger-based skipping.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "safeforge/config.hpp"
#include "safeforge/error.hpp"
#include "safeforge/metrics.hpp"
#include "safeforge/pipeline.hpp"

namespace {

using safeforge::config::PipelineConfig;

struct CommonFlags {
    std::string config_path;
};

PipelineConfig load_config(const CommonFlags& common) {
    if (common.config_path.empty()) {
        return safeforge::config::parse_config_text("");
    }
    return safeforge::config::validate_config(common.config_path);
}

void add_common(CLI::App* cmd, CommonFlags& common) {
    cmd->add_option("--config", common.config_path,
                    "Key=value config file; flags override its values");
}

int run_stages(const std::vector<safeforge::pipeline::Stage>& stages,
               const PipelineConfig& cfg) {
    const auto result = safeforge::pipeline::run_pipeline(stages, cfg, &std::cerr);
    if (result.report) {
        std::cout << safeforge::metrics::render_table(*result.report);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"safe-forge: subject-aware news image generation toolkit"};
    app.require_subcommand(1);

    CommonFlags common;
    PipelineConfig overrides;  // collected flag values

    std::string split_csv;
    std::string seeds_csv;
    std::string loss_window;
    std::string stages_csv;
    std::string exclude_csv;
    std::string mode;
    std::optional<std::string> checkpoint_flag;

    auto* ingest = app.add_subcommand("ingest", "Filter captions, tag entities, assign splits");
    add_common(ingest, common);
    ingest->add_option("--manifest", overrides.manifest, "Input manifest (JSONL)");
    ingest->add_option("--min-words", overrides.min_words, "Minimum caption word count");
    ingest->add_option("--exclude-entities", exclude_csv, "Comma-separated entity types to exclude");
    ingest->add_option("--split", split_csv, "train,val,test ratios");
    ingest->add_option("--seed", overrides.seed, "Split shuffle seed");
    ingest->add_option("--out", overrides.output_root, "Output root directory");
    ingest->add_option("--ner-dictionary", overrides.ner_dictionary, "Gazetteer JSONL for the builtin recognizer");

    auto* curate = app.add_subcommand("curate", "Entropy-crop, IQA-gate and face-flag images");
    add_common(curate, common);
    curate->add_option("--manifest", overrides.manifest, "Input manifest (JSONL)");
    curate->add_option("--target", overrides.crop_target, "Square crop side in pixels");
    curate->add_option("--iqa-threshold", overrides.iqa_threshold, "Minimum quality score");
    curate->add_flag("--face-flag", overrides.face_flag, "Flag images containing faces");
    curate->add_option("--image-root", overrides.image_root, "Directory image paths are relative to");
    curate->add_option("--out", overrides.output_root, "Output root directory");

    auto* ground = app.add_subcommand("ground", "Link mentions and verify entities in images");
    add_common(ground, common);
    ground->add_option("--manifest", overrides.manifest, "Input manifest (JSONL)");
    ground->add_option("--kb-snapshot", overrides.kb_snapshot, "Knowledge snapshot (kb.jsonl)");
    ground->add_option("--min-similarity", overrides.min_similarity, "Face verification cosine threshold");
    ground->add_option("--min-samples", overrides.min_samples, "Minimum verified pairs per entity class");
    ground->add_option("--profiles", overrides.entity_profiles, "Entity profile repository root");
    ground->add_option("--out", overrides.output_root, "Output root directory");

    auto* subjects = app.add_subcommand("subjects", "Extract salient subjects (or rewrite captions) via LLM");
    add_common(subjects, common);
    subjects->add_option("--manifest", overrides.manifest, "Input manifest (JSONL)");
    subjects->add_option("--llm-id", overrides.llm_id, "LLM backend: replay | http:HOST:PORT/MODEL");
    subjects->add_option("--responses", overrides.llm_responses, "Recorded responses for the replay client");
    subjects->add_option("--template", overrides.subjects_template, "structured-json | list-style");
    subjects->add_option("--mode", overrides.subjects_mode, "subjects | rewrite");
    subjects->add_option("--out", overrides.output_root, "Output root directory");

    auto* condition = app.add_subcommand("condition", "Build and cache conditioned embeddings");
    add_common(condition, common);
    condition->add_option("--manifest", overrides.manifest, "Input manifest (JSONL)");
    condition->add_option("--subjects", overrides.subjects_sidecar, "Subject sidecar path");
    condition->add_option("--scale-exp", overrides.generate.scale_exp, "Scale exponent k (beta = 1.1^k)");
    condition->add_option("--out", overrides.output_root, "Output root directory");
    condition->add_flag("--renormalize", overrides.renormalize, "Rescale to preserve the sequence mean (ablation)");

    auto* train = app.add_subcommand("train-dfe", "Reward-feedback fine-tuning of attention adapters");
    add_common(train, common);
    train->add_option("--manifest", overrides.manifest, "Input manifest (JSONL)");
    train->add_option("--subjects", overrides.subjects_sidecar, "Subject sidecar path");
    train->add_option("--lr", overrides.train.learning_rate, "Learning rate");
    train->add_option("--epochs", overrides.train.epochs, "Training epochs");
    train->add_option("--timesteps", overrides.train.scheduler_timesteps, "Scheduler timesteps");
    train->add_option("--loss-window", loss_window, "Inclusive loss timestep window lo:hi");
    train->add_option("--rank", overrides.train.adapter_rank, "Adapter rank");
    train->add_option("--scale-exp", overrides.train.scale_exp, "Conditioning exponent during training");
    train->add_option("--seed", overrides.train.seed, "Training seed");
    train->add_option("--batch-size", overrides.train.batch_size, "Batch size");
    train->add_option("--out", overrides.output_root, "Output root directory");

    auto* generate = app.add_subcommand("generate", "Sample images for the test split");
    add_common(generate, common);
    generate->add_option("--manifest", overrides.manifest, "Input manifest (JSONL)");
    generate->add_option("--subjects", overrides.subjects_sidecar, "Subject sidecar path");
    generate->add_option("--mode", mode, "base | conditioned | rewrite-baseline");
    generate->add_option("--guidance", overrides.generate.guidance_scale, "Classifier-free guidance scale");
    generate->add_option("--steps", overrides.generate.num_inference_steps, "Denoising steps");
    generate->add_option("--seeds", seeds_csv, "Comma-separated seeds");
    generate->add_option("--scale-exp", overrides.generate.scale_exp, "Scale exponent k");
    generate->add_option("--resolution", overrides.generate.resolution, "Output resolution");
    generate->add_option("--out", overrides.generated_dir, "Output image directory");
    generate->add_option("--checkpoint", checkpoint_flag, "Adapter checkpoint path");
    generate->add_option("--output-root", overrides.output_root, "Pipeline output root");

    auto* evaluate = app.add_subcommand("evaluate", "Compute metrics over generated images");
    add_common(evaluate, common);
    evaluate->add_option("--manifest", overrides.manifest, "Input manifest (JSONL)");
    evaluate->add_option("--generated", overrides.generated_dir, "Generated image directory");
    evaluate->add_option("--reference", overrides.reference_dir, "Reference image directory (default: curated images)");
    evaluate->add_option("--entity-profiles", overrides.entity_profiles, "Entity profile repository root");
    evaluate->add_option("--out", overrides.report_path, "Report output path (JSONL)");
    evaluate->add_option("--output-root", overrides.output_root, "Pipeline output root");

    auto* run = app.add_subcommand("run", "Run several stages in order");
    add_common(run, common);
    run->add_option("--stages", stages_csv, "Comma-separated stage list")->required();
    run->add_option("--manifest", overrides.manifest, "Input manifest (JSONL)");
    run->add_option("--out", overrides.output_root, "Output root directory");

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig cfg = load_config(common);

        // Flags override config keys: copy over everything the user set.
        auto* active = app.get_subcommands().front();
        auto override_if = [&](const char* flag, auto& target, const auto& value) {
            const auto* opt = active->get_option_no_throw(flag);
            if (opt != nullptr && opt->count() > 0) target = value;
        };
        override_if("--manifest", cfg.manifest, overrides.manifest);
        override_if("--min-words", cfg.min_words, overrides.min_words);
        if (active == ingest) override_if("--seed", cfg.seed, overrides.seed);
        if (active == train) override_if("--seed", cfg.train.seed, overrides.train.seed);
        if (active != generate && active != evaluate) {
            // On `generate` --out names the image directory; on `evaluate`
            // it names the report file.
            override_if("--out", cfg.output_root, overrides.output_root);
        }
        override_if("--ner-dictionary", cfg.ner_dictionary, overrides.ner_dictionary);
        override_if("--target", cfg.crop_target, overrides.crop_target);
        override_if("--iqa-threshold", cfg.iqa_threshold, overrides.iqa_threshold);
        override_if("--face-flag", cfg.face_flag, overrides.face_flag);
        override_if("--image-root", cfg.image_root, overrides.image_root);
        override_if("--kb-snapshot", cfg.kb_snapshot, overrides.kb_snapshot);
        override_if("--min-similarity", cfg.min_similarity, overrides.min_similarity);
        override_if("--min-samples", cfg.min_samples, overrides.min_samples);
        override_if("--profiles", cfg.entity_profiles, overrides.entity_profiles);
        override_if("--entity-profiles", cfg.entity_profiles, overrides.entity_profiles);
        override_if("--llm-id", cfg.llm_id, overrides.llm_id);
        override_if("--responses", cfg.llm_responses, overrides.llm_responses);
        override_if("--template", cfg.subjects_template, overrides.subjects_template);
        if (active == subjects) {
            override_if("--mode", cfg.subjects_mode, overrides.subjects_mode);
        }
        override_if("--subjects", cfg.subjects_sidecar, overrides.subjects_sidecar);
        override_if("--renormalize", cfg.renormalize, overrides.renormalize);
        override_if("--lr", cfg.train.learning_rate, overrides.train.learning_rate);
        override_if("--epochs", cfg.train.epochs, overrides.train.epochs);
        override_if("--timesteps", cfg.train.scheduler_timesteps, overrides.train.scheduler_timesteps);
        override_if("--rank", cfg.train.adapter_rank, overrides.train.adapter_rank);
        override_if("--batch-size", cfg.train.batch_size, overrides.train.batch_size);
        override_if("--guidance", cfg.generate.guidance_scale, overrides.generate.guidance_scale);
        override_if("--steps", cfg.generate.num_inference_steps, overrides.generate.num_inference_steps);
        override_if("--resolution", cfg.generate.resolution, overrides.generate.resolution);
        override_if("--report", cfg.report_path, overrides.report_path);
        override_if("--output-root", cfg.output_root, overrides.output_root);
        if (active == condition || active == generate) {
            override_if("--scale-exp", cfg.generate.scale_exp, overrides.generate.scale_exp);
        }
        if (active == train) {
            override_if("--scale-exp", cfg.train.scale_exp, overrides.train.scale_exp);
        }
        if (active == generate) {
            override_if("--out", cfg.generated_dir, overrides.generated_dir);
            if (generate->count("--mode") > 0) {
                cfg.generate.mode = safeforge::gen::mode_from_name(mode);
            }
            if (checkpoint_flag) cfg.generate.checkpoint = *checkpoint_flag;
        }
        if (active == evaluate) {
            override_if("--generated", cfg.generated_dir, overrides.generated_dir);
            override_if("--reference", cfg.reference_dir, overrides.reference_dir);
            override_if("--out", cfg.report_path, overrides.report_path);
        }
        if (!exclude_csv.empty()) {
            cfg.excluded_entities.clear();
            for (const auto& t : safeforge::text::split(exclude_csv, ',')) {
                const std::string e = safeforge::text::trim(t);
                if (!e.empty()) cfg.excluded_entities.push_back(e);
            }
        }
        if (!split_csv.empty()) {
            const auto parts = safeforge::text::split(split_csv, ',');
            if (parts.size() != 3) throw safeforge::Error("invalid_split_ratios");
            cfg.split_train = std::stod(parts[0]);
            cfg.split_val = std::stod(parts[1]);
            cfg.split_test = std::stod(parts[2]);
        }
        if (!seeds_csv.empty()) {
            cfg.generate.seeds.clear();
            for (const auto& s : safeforge::text::split(seeds_csv, ',')) {
                cfg.generate.seeds.push_back(std::stoull(s));
            }
        }
        if (!loss_window.empty()) {
            const auto colon = loss_window.find(':');
            if (colon == std::string::npos) throw safeforge::Error("invalid_loss_window");
            cfg.train.loss_t_min = std::stoi(loss_window.substr(0, colon));
            cfg.train.loss_t_max = std::stoi(loss_window.substr(colon + 1));
        }

        using safeforge::pipeline::Stage;
        if (active == ingest) return run_stages({Stage::Ingest}, cfg);
        if (active == curate) return run_stages({Stage::Curate}, cfg);
        if (active == ground) return run_stages({Stage::Ground}, cfg);
        if (active == subjects) return run_stages({Stage::Subjects}, cfg);
        if (active == condition) return run_stages({Stage::Condition}, cfg);
        if (active == train) return run_stages({Stage::Train}, cfg);
        if (active == generate) return run_stages({Stage::Generate}, cfg);
        if (active == evaluate) return run_stages({Stage::Evaluate}, cfg);
        if (active == run) {
            return run_stages(safeforge::pipeline::stages_from_csv(stages_csv), cfg);
        }
        return 1;
    } catch (const safeforge::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
