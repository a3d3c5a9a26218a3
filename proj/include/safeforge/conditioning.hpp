// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "safeforge/text.hpp"

namespace safeforge::conditioning {

struct TokenizedText {
    std::vector<int> ids;                   // includes begin/end specials
    std::vector<text::CharSpan> offsets;    // char span per token; empty for specials
    std::vector<bool> special;
};

struct EmbeddingSequence {
    std::vector<int> token_ids;
    std::vector<bool> special;
    Eigen::MatrixXd vectors;  // token_count x dim

    int token_count() const { return static_cast<int>(vectors.rows()); }
    int dim() const { return static_cast<int>(vectors.cols()); }
};

// Text encoder handle. The built-in TinyTextEncoder stands in for a real
// encoder at desk scale; both expose token offsets so subject phrases can be
// aligned back to token indices.
class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    virtual TokenizedText tokenize(const std::string& caption) const = 0;
    virtual EmbeddingSequence encode(const std::string& caption) const = 0;
    virtual EmbeddingSequence encode_unconditional() const = 0;
    virtual int context_limit() const = 0;
    virtual int dim() const = 0;
    virtual std::string id() const = 0;
};

// Inclusive token index range [first, last].
struct TokenSpan {
    int first = 0;
    int last = 0;

    bool operator==(const TokenSpan&) const = default;
};

// Per-token scale multipliers: beta on key-subject token indices, 1
// elsewhere.
struct WeightVector {
    std::vector<double> weights;
    double beta = 1.0;
    std::vector<int> key_indices;  // sorted, deduplicated

    bool all_ones() const;
};

// beta = 1.1^k for the x-k scale grid; k=0 is the no-op multiplier.
double scale_exponent_to_beta(int k);

// Builds the weight vector for `token_count` tokens. Span indices are
// deduplicated; positions marked special never receive beta even when a
// span touches them. Throws Error("span_out_of_bounds") for spans outside
// [0, token_count).
WeightVector build_weight_vector(int token_count,
                                 const std::vector<TokenSpan>& key_spans,
                                 double beta,
                                 const std::vector<bool>* special_positions = nullptr);

// Row-wise scaling of the encoder output. Rows with weight exactly 1 are
// copied untouched so the all-ones path is bit-identical to the input. The
// optional renormalize flag rescales the result to preserve the mean of the
// original sequence (off by default; ablation only).
EmbeddingSequence condition_embeddings(const EmbeddingSequence& base,
                                       const WeightVector& weights,
                                       bool renormalize = false);

EmbeddingSequence encode_caption(const std::string& caption,
                                 const TextEncoder& encoder);

// Minimal contiguous token spans covering each (case-insensitive,
// whitespace-normalized) occurrence of each phrase. Unlocatable phrases are
// dropped; their text is appended to `dropped` when provided.
std::vector<TokenSpan> align_phrases_to_tokens(
    const std::string& caption, const std::vector<std::string>& phrases,
    const TextEncoder& encoder, std::vector<std::string>* dropped = nullptr);

// Flat binary cache of conditioned embeddings with a JSONL index
// (record_id -> row-major float64 matrix).
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::string base_path);

    void put(const std::string& record_id, const Eigen::MatrixXd& matrix);
    std::optional<Eigen::MatrixXd> get(const std::string& record_id) const;
    std::size_t size() const { return index_.size(); }

    static EmbeddingCache open(const std::string& base_path);

private:
    struct Entry {
        std::uint64_t offset = 0;
        int rows = 0;
        int cols = 0;
    };
    std::string base_path_;  // "<base>.bin" and "<base>.index.jsonl"
    std::vector<std::pair<std::string, Entry>> index_;
};

}  // namespace safeforge::conditioning
