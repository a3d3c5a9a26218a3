// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "safeforge/conditioning.hpp"
#include "safeforge/image.hpp"
#include "safeforge/models.hpp"

namespace safeforge::builtin {

// ---------------------------------------------------------------------------
// Text-side builtins
// ---------------------------------------------------------------------------

// Gazetteer named-entity recognizer: longest-match dictionary lookup over
// word boundaries. Deterministic; the dictionary ships with fixtures or is
// loaded from a JSONL file of {"surface": ..., "type": ...} lines.
class GazetteerNer final : public models::NerBackend {
public:
    GazetteerNer() = default;
    explicit GazetteerNer(const std::string& dictionary_path);

    void add(const std::string& surface, const std::string& type);

    std::vector<models::NerMention> tag(const std::string& text) const override;
    std::string id() const override { return "gazetteer-ner"; }

private:
    // normalized surface -> (original length in words, type)
    std::map<std::vector<std::string>, std::string> entries_;
    std::size_t max_words_ = 0;
};

// Bag-of-lemmas cosine similarity. Identical strings score exactly 1.
class TokenOverlapSimilarity final : public models::SentenceSimilarity {
public:
    double similarity(const std::string& a, const std::string& b) const override;
    std::string id() const override { return "token-overlap-sim"; }
};

// Alias-table entity linker over a local knowledge snapshot
// (kb.jsonl: {"entity_id", "display_name", "aliases": [...]}).
class AliasLinker final : public models::EntityLinker {
public:
    explicit AliasLinker(const std::string& kb_snapshot_path);

    std::optional<models::LinkResult> link(const std::string& surface) const override;
    std::string id() const override { return "alias-linker"; }

    const std::map<std::string, std::string>& display_names() const {
        return display_names_;
    }

private:
    std::unordered_map<std::string, models::LinkResult> aliases_;
    std::map<std::string, std::string> display_names_;  // entity_id -> name
};

// ---------------------------------------------------------------------------
// Image-side builtins
// ---------------------------------------------------------------------------

// Reference-free quality score from sharpness (mean absolute Laplacian) and
// noisiness (median-filter residual), combined into [0, 1]. Flat and
// pure-noise images score low; structured images with clean edges score
// high.
class TinyIqa final : public models::IqaModel {
public:
    double score(const img::Image& image) const override;
    std::string id() const override { return "tiny-iqa"; }
};

// Synthetic face pattern shared by the tiny detector/embedder pair: a
// mid-bright ellipse with two dark eye dots and a dark mouth bar. Identity
// varies the eye/mouth geometry.
void paint_face(img::Image& image, const img::Box& box, int identity);

class TinyFaceDetector final : public models::FaceDetector {
public:
    std::vector<manifest::FaceBox> detect(const img::Image& image) const override;
    std::string id() const override { return "tiny-face-detector"; }
};

// Embeds a face crop as the mean-centered, unit-norm 16x16 grayscale patch,
// masked to the inscribed circle so background corners do not leak in.
class TinyFaceEmbedder final : public models::FaceEmbedder {
public:
    Eigen::VectorXd embed(const img::Image& face_crop) const override;
    int dim() const override { return 256; }
    std::string id() const override { return "tiny-face-embedder"; }
};

// ---------------------------------------------------------------------------
// Latent autoencoder + caption-target scorers
// ---------------------------------------------------------------------------

struct LatentShape {
    int block_rows = 0;  // height / 8
    int block_cols = 0;  // width / 8
    int channels = 3;

    int tokens() const { return block_rows * block_cols; }
};

// 8x box-downsampling "autoencoder": encode averages 8x8 blocks per RGB
// channel into [-1, 1]; decode upsamples by repetition. The decode path is
// linear, which keeps the training loss differentiable end to end.
class TinyAutoencoder {
public:
    static constexpr int kFactor = 8;

    LatentShape shape_for(int width, int height) const;
    // tokens x 3 matrix, row-major over blocks.
    Eigen::MatrixXd encode(const img::Image& image) const;
    img::Image decode(const Eigen::MatrixXd& latent, const LatentShape& shape) const;
    std::string id() const { return "tiny-autoencoder-8x"; }
};

// Deterministic caption-conditioned latent target used by the tiny scorers
// and the synthetic training reward.
Eigen::MatrixXd caption_target_latent(const std::string& caption,
                                      const LatentShape& shape,
                                      const std::string& salt);

// ImageReward-style alignment: 1 - mean squared distance between the image's
// latent and the caption target (higher is better, roughly [-3, 1]).
class TinyAlignmentScorer final : public models::AlignmentScorer {
public:
    double score(const img::Image& image, const std::string& caption) const override;
    std::string id() const override { return "tiny-alignment-scorer"; }
};

// Preference-style alignment in [0, 1]: cosine between flattened latent and
// a differently salted caption target, mapped to the unit interval.
class TinyPreferenceScorer final : public models::AlignmentScorer {
public:
    double score(const img::Image& image, const std::string& caption) const override;
    std::string id() const override { return "tiny-preference-scorer"; }
};

// 16-dim deterministic image features for distribution metrics.
class TinyFeatureExtractor final : public models::FeatureExtractor {
public:
    Eigen::VectorXd extract(const img::Image& image) const override;
    int dim() const override { return 16; }
    std::string id() const override { return "tiny-feature-extractor"; }
};

// ---------------------------------------------------------------------------
// Text encoder
// ---------------------------------------------------------------------------

// Deterministic stand-in for a contextual text encoder: hashed token
// embeddings plus sinusoidal positions and one neighbor-mixing pass.
// Begin/end specials bracket the caption; the context limit matches
// CLIP-style encoders.
class TinyTextEncoder final : public conditioning::TextEncoder {
public:
    static constexpr int kDim = 32;
    static constexpr int kContextLimit = 77;
    static constexpr int kBosId = 1;
    static constexpr int kEosId = 2;

    conditioning::TokenizedText tokenize(const std::string& caption) const override;
    conditioning::EmbeddingSequence encode(const std::string& caption) const override;
    conditioning::EmbeddingSequence encode_unconditional() const override;
    int context_limit() const override { return kContextLimit; }
    int dim() const override { return kDim; }
    std::string id() const override { return "tiny-text-encoder"; }

private:
    conditioning::EmbeddingSequence encode_tokens(
        const conditioning::TokenizedText& toks) const;
};

// ---------------------------------------------------------------------------
// LLM clients
// ---------------------------------------------------------------------------

// Replays recorded completions keyed by the FNV hash of the user prompt
// (responses.jsonl: {"key": hex64, "response": ...}). Unknown prompts return
// an empty completion, which downstream parsing treats as fallback.
class ReplayLlmClient final : public models::LlmClient {
public:
    explicit ReplayLlmClient(const std::string& responses_path);

    std::string complete(const std::string& system_prompt,
                         const std::string& user_prompt) override;
    std::string id() const override { return id_; }

    static std::string key_for(const std::string& user_prompt);

private:
    std::unordered_map<std::string, std::string> responses_;
    std::string id_ = "replay";
};

// Chat-completion HTTP client (OpenAI-style /v1/chat/completions payload).
// Temperature is pinned to 0; the bearer token comes from SAFE_LLM_API_KEY.
// Retries with exponential backoff, then throws Error("llm_unreachable").
class HttpChatClient final : public models::LlmClient {
public:
    HttpChatClient(std::string host, int port, std::string model,
                   int max_retries = 3);

    std::string complete(const std::string& system_prompt,
                         const std::string& user_prompt) override;
    std::string id() const override { return model_; }

private:
    std::string host_;
    int port_;
    std::string model_;
    int max_retries_;
};

// Write-through JSONL cache keyed by (llm id, prompt pair); repeated runs
// replay from disk instead of re-querying.
class CachingLlmClient final : public models::LlmClient {
public:
    CachingLlmClient(std::shared_ptr<models::LlmClient> inner,
                     std::string cache_path);

    std::string complete(const std::string& system_prompt,
                         const std::string& user_prompt) override;
    std::string id() const override { return inner_->id(); }

private:
    std::shared_ptr<models::LlmClient> inner_;
    std::string cache_path_;
    std::unordered_map<std::string, std::string> cache_;
};

}  // namespace safeforge::builtin
