// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "safeforge/error.hpp"

namespace safeforge::conditioning {

using json = nlohmann::ordered_json;

bool WeightVector::all_ones() const {
    for (const double w : weights) {
        if (w != 1.0) return false;
    }
    return true;
}

double scale_exponent_to_beta(int k) {
    if (k < 0) throw Error("negative_scale_exponent");
    if (k > 4) throw Error("scale_exponent_out_of_range", "supported grid is x0..x4");
    double beta = 1.0;
    for (int i = 0; i < k; ++i) beta *= 1.1;
    return beta;
}

WeightVector build_weight_vector(int token_count,
                                 const std::vector<TokenSpan>& key_spans,
                                 double beta,
                                 const std::vector<bool>* special_positions) {
    if (token_count < 0) throw Error("invalid_token_count");
    if (beta < 1.0) throw Error("invalid_beta", "beta must be >= 1");
    if (special_positions != nullptr &&
        static_cast<int>(special_positions->size()) != token_count) {
        throw Error("weight_length_mismatch", "special mask length");
    }

    std::set<int> keys;
    for (const auto& span : key_spans) {
        if (span.first < 0 || span.last >= token_count || span.first > span.last) {
            throw Error("span_out_of_bounds");
        }
        for (int i = span.first; i <= span.last; ++i) {
            if (special_positions != nullptr && (*special_positions)[static_cast<std::size_t>(i)]) {
                continue;  // specials never receive beta
            }
            keys.insert(i);
        }
    }

    WeightVector out;
    out.beta = beta;
    out.weights.assign(static_cast<std::size_t>(token_count), 1.0);
    out.key_indices.assign(keys.begin(), keys.end());
    for (const int i : out.key_indices) {
        out.weights[static_cast<std::size_t>(i)] = beta;
    }
    return out;
}

EmbeddingSequence condition_embeddings(const EmbeddingSequence& base,
                                       const WeightVector& weights,
                                       bool renormalize) {
    const int m = base.token_count();
    if (static_cast<int>(weights.weights.size()) != m) {
        throw Error("weight_length_mismatch");
    }
    EmbeddingSequence out;
    out.token_ids = base.token_ids;
    out.special = base.special;
    out.vectors = base.vectors;
    for (int i = 0; i < m; ++i) {
        const double w = weights.weights[static_cast<std::size_t>(i)];
        if (w != 1.0) {
            out.vectors.row(i) *= w;
        }
        // weight 1 rows stay bit-identical to the input
    }
    if (renormalize && m > 0) {
        const double before = base.vectors.mean();
        const double after = out.vectors.mean();
        if (after != 0.0 && before != 0.0) {
            out.vectors *= before / after;
        }
    }
    return out;
}

EmbeddingSequence encode_caption(const std::string& caption,
                                 const TextEncoder& encoder) {
    if (caption.empty()) throw Error("empty_caption");
    const auto toks = encoder.tokenize(caption);
    if (static_cast<int>(toks.ids.size()) > encoder.context_limit()) {
        throw Error("context_overflow",
                    "caption tokenizes to " + std::to_string(toks.ids.size()) +
                        " tokens; encoder limit is " +
                        std::to_string(encoder.context_limit()));
    }
    return encoder.encode(caption);
}

std::vector<TokenSpan> align_phrases_to_tokens(
    const std::string& caption, const std::vector<std::string>& phrases,
    const TextEncoder& encoder, std::vector<std::string>* dropped) {
    const auto toks = encoder.tokenize(caption);
    std::vector<TokenSpan> spans;
    for (const auto& phrase : phrases) {
        const auto occurrences = text::find_phrase_occurrences(caption, phrase);
        if (occurrences.empty()) {
            if (dropped != nullptr) dropped->push_back(phrase);
            continue;
        }
        for (const auto& occ : occurrences) {
            int first = -1;
            int last = -1;
            for (std::size_t t = 0; t < toks.ids.size(); ++t) {
                if (toks.special[t]) continue;
                const auto& span = toks.offsets[t];
                const bool overlaps = span.begin < occ.end && occ.begin < span.end;
                if (overlaps) {
                    if (first < 0) first = static_cast<int>(t);
                    last = static_cast<int>(t);
                }
            }
            if (first >= 0) {
                spans.push_back({first, last});
            } else if (dropped != nullptr) {
                dropped->push_back(phrase);
            }
        }
    }
    return spans;
}

EmbeddingCache::EmbeddingCache(std::string base_path)
    : base_path_(std::move(base_path)) {}

void EmbeddingCache::put(const std::string& record_id,
                         const Eigen::MatrixXd& matrix) {
    std::ofstream bin(base_path_ + ".bin", std::ios::binary | std::ios::app);
    if (!bin) throw Error("cache_write_failed", base_path_ + ".bin");
    bin.seekp(0, std::ios::end);
    const auto offset = static_cast<std::uint64_t>(bin.tellp());
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
            const double v = matrix(r, c);
            bin.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    }
    bin.close();

    std::ofstream idx(base_path_ + ".index.jsonl", std::ios::app);
    if (!idx) throw Error("cache_write_failed", base_path_ + ".index.jsonl");
    json j;
    j["record_id"] = record_id;
    j["offset"] = offset;
    j["rows"] = matrix.rows();
    j["cols"] = matrix.cols();
    j["dtype"] = "f64";
    idx << j.dump() << "\n";

    index_.emplace_back(record_id,
                        Entry{offset, static_cast<int>(matrix.rows()),
                              static_cast<int>(matrix.cols())});
}

std::optional<Eigen::MatrixXd> EmbeddingCache::get(
    const std::string& record_id) const {
    const Entry* entry = nullptr;
    for (const auto& [id, e] : index_) {
        if (id == record_id) entry = &e;  // last write wins
    }
    if (entry == nullptr) return std::nullopt;
    std::ifstream bin(base_path_ + ".bin", std::ios::binary);
    if (!bin) throw Error("cache_read_failed", base_path_ + ".bin");
    bin.seekg(static_cast<std::streamoff>(entry->offset));
    Eigen::MatrixXd m(entry->rows, entry->cols);
    for (int r = 0; r < entry->rows; ++r) {
        for (int c = 0; c < entry->cols; ++c) {
            double v;
            bin.read(reinterpret_cast<char*>(&v), sizeof(v));
            if (!bin) throw Error("cache_read_failed", "truncated blob");
            m(r, c) = v;
        }
    }
    return m;
}

EmbeddingCache EmbeddingCache::open(const std::string& base_path) {
    EmbeddingCache cache(base_path);
    std::ifstream idx(base_path + ".index.jsonl");
    if (idx) {
        std::string line;
        while (std::getline(idx, line)) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            cache.index_.emplace_back(
                j.at("record_id").get<std::string>(),
                Entry{j.at("offset").get<std::uint64_t>(),
                      j.at("rows").get<int>(), j.at("cols").get<int>()});
        }
    }
    return cache;
}

}  // namespace safeforge::conditioning
