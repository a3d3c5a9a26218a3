// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "safeforge/manifest.hpp"
#include "safeforge/models.hpp"

namespace safeforge::corpus {

struct CorpusStats {
    std::size_t unique_tokens = 0;
    double mean_caption_length = 0.0;    // words
    double stddev_caption_length = 0.0;  // words, population stddev
    std::size_t sample_count = 0;
};

// Applies the length and entity-type rules, appending one verdict per rule.
// Returns true iff every rule passed. The record is otherwise unchanged;
// token_count is refreshed from the caption. An empty exclusion set means
// the entity rule passes trivially (the entity-subset path).
bool filter_caption(manifest::Record& record, std::size_t min_words,
                    const std::set<std::string>& excluded_entity_types);

// Populates entity_mentions. Source-provided annotations (mentions_provided)
// take precedence over recognizer output. Throws
// Error("ner_backend_unavailable") when no recognizer is supplied and the
// record carries no provided annotations.
void tag_entities(manifest::Record& record, const models::NerBackend* ner);

CorpusStats compute_corpus_stats(const std::vector<manifest::Record>& records);

// Maps each record's raw article category onto the closest taxonomy label
// when similarity >= min_similarity; ties break by taxonomy order. A null
// similarity model leaves every record unlabeled with a warning verdict.
void cluster_categories(std::vector<manifest::Record>& records,
                        const std::vector<std::string>& taxonomy,
                        const models::SentenceSimilarity* model,
                        double min_similarity);

struct SplitRatios {
    double train = 0.9;
    double val = 0.05;
    double test = 0.05;
};

// Disjoint, exhaustive split assignment over the given records; each split
// size is within one record of ratio * n. Deterministic for a fixed seed.
// Throws Error("split_reassignment") if any record is already assigned.
void assign_splits(std::vector<manifest::Record>& records,
                   const SplitRatios& ratios, std::uint64_t seed);

}  // namespace safeforge::corpus
