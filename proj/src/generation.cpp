// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/generation.hpp"

#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "safeforge/dfe.hpp"
#include "safeforge/error.hpp"
#include "safeforge/hash.hpp"

namespace safeforge::gen {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::Base: return "base";
        case Mode::Conditioned: return "conditioned";
        case Mode::RewriteBaseline: return "rewrite-baseline";
    }
    return "base";
}

Mode mode_from_name(const std::string& name) {
    if (name == "base") return Mode::Base;
    if (name == "conditioned") return Mode::Conditioned;
    if (name == "rewrite-baseline") return Mode::RewriteBaseline;
    throw Error("unknown_generation_mode", name);
}

void GenerationConfig::validate() const {
    if (guidance_scale <= 0.0) throw Error("invalid_guidance_scale");
    if (num_inference_steps < 1) throw Error("invalid_inference_steps");
    if (seeds.empty()) throw Error("no_seeds");
    if (resolution < 16 || resolution % builtin::TinyAutoencoder::kFactor != 0) {
        throw Error("invalid_resolution",
                    "resolution must be a positive multiple of 8");
    }
    if (scale_exp < 0 || scale_exp > 4) throw Error("scale_exponent_out_of_range");
}

namespace {

Eigen::MatrixXd seeded_normal(Eigen::Index rows, Eigen::Index cols,
                              std::uint64_t seed) {
    DetRng rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = rng.next_normal();
        }
    }
    return m;
}

}  // namespace

std::vector<img::Image> generate(const std::string& caption,
                                 const subjects::SubjectAnnotation* annotation,
                                 const std::optional<std::string>& rewrite,
                                 const GenerationConfig& config,
                                 const GenModels& models) {
    config.validate();
    if (models.encoder == nullptr || models.denoiser == nullptr ||
        models.autoencoder == nullptr || models.scheduler == nullptr) {
        throw Error("models_missing");
    }
    if (config.mode == Mode::Conditioned && annotation == nullptr) {
        throw Error("subjects_missing",
                    "conditioned mode needs an annotation or fallback flag");
    }

    const std::string prompt =
        config.mode == Mode::RewriteBaseline
            ? (rewrite && !rewrite->empty() ? *rewrite
                                            : subjects::rewrite_fallback(caption))
            : caption;

    conditioning::EmbeddingSequence ctx =
        conditioning::encode_caption(prompt, *models.encoder);
    if (config.mode == Mode::Conditioned && !annotation->fallback_used) {
        const auto spans = conditioning::align_phrases_to_tokens(
            caption, annotation->phrases(), *models.encoder);
        const double beta = conditioning::scale_exponent_to_beta(config.scale_exp);
        const auto weights = conditioning::build_weight_vector(
            ctx.token_count(), spans, beta, &ctx.special);
        ctx = conditioning::condition_embeddings(ctx, weights);
    }
    const conditioning::EmbeddingSequence uncond =
        models.encoder->encode_unconditional();

    const builtin::LatentShape shape =
        models.autoencoder->shape_for(config.resolution, config.resolution);
    const auto schedule =
        models.scheduler->inference_schedule(config.num_inference_steps);

    std::vector<img::Image> out;
    out.reserve(config.seeds.size());
    for (const std::uint64_t seed : config.seeds) {
        Eigen::MatrixXd z = seeded_normal(shape.tokens(), shape.channels,
                                          derive_seed(seed, "generation-init"));
        for (std::size_t i = 0; i < schedule.size(); ++i) {
            const int t = schedule[i];
            const int t_prev =
                i + 1 < schedule.size() ? schedule[i + 1] : -1;
            const Eigen::MatrixXd eps_cond =
                models.denoiser->forward(z, t, ctx.vectors, models.adapters);
            const Eigen::MatrixXd eps_uncond =
                models.denoiser->forward(z, t, uncond.vectors, models.adapters);
            const Eigen::MatrixXd eps =
                eps_uncond + config.guidance_scale * (eps_cond - eps_uncond);
            z = models.scheduler->step(z, eps, t, t_prev);
        }
        out.push_back(models.autoencoder->decode(z, shape));
    }
    return out;
}

std::string provenance_to_json_line(const ProvenanceRow& row) {
    json j;
    j["record_id"] = row.record_id;
    j["seed"] = row.seed;
    j["mode"] = row.mode;
    j["scale_exp"] = row.scale_exp;
    j["checkpoint_hash"] = row.checkpoint_hash;
    j["guidance_scale"] = row.guidance_scale;
    j["num_inference_steps"] = row.num_inference_steps;
    j["resolution"] = row.resolution;
    j["sampler"] = row.sampler;
    j["image_file"] = row.image_file;
    return j.dump();
}

ProvenanceRow provenance_from_json_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw Error("provenance_parse_failed", e.what());
    }
    ProvenanceRow row;
    row.record_id = j.at("record_id").get<std::string>();
    row.seed = j.at("seed").get<std::uint64_t>();
    row.mode = j.at("mode").get<std::string>();
    row.scale_exp = j.at("scale_exp").get<int>();
    row.checkpoint_hash = j.at("checkpoint_hash").get<std::string>();
    row.guidance_scale = j.at("guidance_scale").get<double>();
    row.num_inference_steps = j.at("num_inference_steps").get<int>();
    row.resolution = j.at("resolution").get<int>();
    row.sampler = j.value("sampler", std::string{"ddim"});
    row.image_file = j.at("image_file").get<std::string>();
    return row;
}

namespace {

bool rows_compatible(const ProvenanceRow& a, const ProvenanceRow& b) {
    return a.record_id == b.record_id && a.seed == b.seed && a.mode == b.mode &&
           a.scale_exp == b.scale_exp && a.checkpoint_hash == b.checkpoint_hash &&
           a.guidance_scale == b.guidance_scale &&
           a.num_inference_steps == b.num_inference_steps &&
           a.resolution == b.resolution && a.sampler == b.sampler;
}

}  // namespace

BatchResult batch_generate(const std::vector<manifest::Record>& records,
                           const std::vector<subjects::SubjectAnnotation>& annotations,
                           const std::vector<subjects::RewriteRecord>& rewrites,
                           const GenerationConfig& config, const GenModels& models,
                           const std::string& out_dir,
                           const std::string& provenance_path) {
    config.validate();
    fs::create_directories(out_dir);

    std::map<std::string, const subjects::SubjectAnnotation*> by_id;
    for (const auto& a : annotations) by_id[a.record_id] = &a;
    std::map<std::string, std::string> rewrite_by_id;
    for (const auto& r : rewrites) rewrite_by_id[r.record_id] = r.rewrite;

    std::map<std::pair<std::string, std::uint64_t>, ProvenanceRow> existing;
    {
        std::ifstream in(provenance_path);
        std::string line;
        while (in && std::getline(in, line)) {
            if (line.empty()) continue;
            const auto row = provenance_from_json_line(line);
            existing[{row.record_id, row.seed}] = row;
        }
    }

    const std::string checkpoint_hash =
        config.checkpoint ? hex64(dfe::file_fingerprint(*config.checkpoint))
                          : std::string{"none"};

    BatchResult result;
    std::ofstream prov(provenance_path, std::ios::app);
    if (!prov) throw Error("provenance_write_failed", provenance_path);

    for (const auto& record : records) {
        const subjects::SubjectAnnotation* annotation = nullptr;
        if (const auto it = by_id.find(record.id); it != by_id.end()) {
            annotation = it->second;
        }
        subjects::SubjectAnnotation fallback;
        if (config.mode == Mode::Conditioned && annotation == nullptr) {
            fallback.record_id = record.id;
            fallback.fallback_used = true;
            annotation = &fallback;
        }
        std::optional<std::string> rewrite;
        if (const auto it = rewrite_by_id.find(record.id); it != rewrite_by_id.end()) {
            rewrite = it->second;
        }

        for (const std::uint64_t seed : config.seeds) {
            ProvenanceRow row;
            row.record_id = record.id;
            row.seed = seed;
            row.mode = mode_name(config.mode);
            row.scale_exp = config.scale_exp;
            row.checkpoint_hash = checkpoint_hash;
            row.guidance_scale = config.guidance_scale;
            row.num_inference_steps = config.num_inference_steps;
            row.resolution = config.resolution;
            row.image_file = record.id + "_" + std::to_string(seed) + ".ppm";

            const auto it = existing.find({record.id, seed});
            if (it != existing.end() && rows_compatible(it->second, row) &&
                fs::exists(fs::path(out_dir) / it->second.image_file)) {
                ++result.skipped;
                continue;
            }

            try {
                GenerationConfig single = config;
                single.seeds = {seed};
                const auto images =
                    generate(record.caption, annotation, rewrite, single, models);
                img::save_pnm(images.front(),
                              (fs::path(out_dir) / row.image_file).string());
                prov << provenance_to_json_line(row) << "\n";
                prov.flush();
                ++result.generated;
            } catch (const std::exception& e) {
                result.errors.push_back({record.id, e.what()});
            }
        }
    }
    return result;
}

dfe::AdapterSet load_generation_adapters(const std::string& checkpoint_path,
                                         const dfe::TinyDenoiser& backbone) {
    const auto ck = dfe::load_checkpoint(checkpoint_path);
    if (ck.state.frozen_base_fingerprint != backbone.base_fingerprint()) {
        throw Error("checkpoint_incompatible",
                    "checkpoint was trained against a different base model");
    }
    return ck.state.adapters;
}

}  // namespace safeforge::gen
