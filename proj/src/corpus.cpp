// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "safeforge/error.hpp"
#include "safeforge/hash.hpp"
#include "safeforge/text.hpp"

namespace safeforge::corpus {

bool filter_caption(manifest::Record& record, std::size_t min_words,
                    const std::set<std::string>& excluded_entity_types) {
    if (record.caption.empty()) {
        throw Error("empty_caption", "record " + record.id);
    }
    if (min_words < 1) throw Error("invalid_min_words");

    if (!text::utf8_valid(record.caption)) {
        record.set_verdict("untokenizable", false);
        return false;
    }

    record.token_count = text::word_count(record.caption);

    const bool length_ok = record.token_count >= min_words;
    record.set_verdict("min_words", length_ok);

    bool entity_ok = true;
    for (const auto& m : record.entity_mentions) {
        if (excluded_entity_types.count(m.type) > 0) {
            entity_ok = false;
            break;
        }
    }
    record.set_verdict("excluded_entity_types", entity_ok);

    return length_ok && entity_ok;
}

void tag_entities(manifest::Record& record, const models::NerBackend* ner) {
    if (record.caption.empty()) {
        throw Error("empty_caption", "record " + record.id);
    }
    if (record.mentions_provided) {
        // Source annotations win over recognizer output, but they still
        // have to honor the span invariants: inside the caption, ordered,
        // non-overlapping. Violators are dropped with an audit verdict.
        std::sort(record.entity_mentions.begin(), record.entity_mentions.end(),
                  [](const manifest::EntityMention& a,
                     const manifest::EntityMention& b) {
                      return a.begin < b.begin;
                  });
        std::vector<manifest::EntityMention> kept;
        std::size_t last_end = 0;
        bool dropped = false;
        for (auto& m : record.entity_mentions) {
            const bool valid = m.begin < m.end &&
                               m.end <= record.caption.size() &&
                               (kept.empty() || m.begin >= last_end);
            if (valid) {
                last_end = m.end;
                kept.push_back(std::move(m));
            } else {
                dropped = true;
            }
        }
        record.entity_mentions = std::move(kept);
        if (dropped) record.set_verdict("invalid_mentions_dropped", true);
        return;
    }
    if (ner == nullptr) {
        throw Error("ner_backend_unavailable", "record " + record.id);
    }
    record.entity_mentions.clear();
    for (const auto& m : ner->tag(record.caption)) {
        record.entity_mentions.push_back({m.surface, m.type, m.begin, m.end});
    }
}

CorpusStats compute_corpus_stats(const std::vector<manifest::Record>& records) {
    if (records.empty()) throw Error("empty_corpus");
    CorpusStats stats;
    stats.sample_count = records.size();

    std::unordered_set<std::string> vocab;
    double sum = 0.0;
    double sumsq = 0.0;
    for (const auto& r : records) {
        const auto tokens = text::word_tokens(r.caption);
        const auto n = static_cast<double>(tokens.size());
        sum += n;
        sumsq += n * n;
        for (const auto& tok : tokens) {
            vocab.insert(text::lemmatize(tok));
        }
    }
    const auto n = static_cast<double>(records.size());
    stats.unique_tokens = vocab.size();
    stats.mean_caption_length = sum / n;
    const double var =
        std::max(0.0, sumsq / n - stats.mean_caption_length * stats.mean_caption_length);
    stats.stddev_caption_length = std::sqrt(var);
    return stats;
}

void cluster_categories(std::vector<manifest::Record>& records,
                        const std::vector<std::string>& taxonomy,
                        const models::SentenceSimilarity* model,
                        double min_similarity) {
    if (taxonomy.empty()) throw Error("empty_taxonomy");
    if (!(min_similarity > 0.0 && min_similarity <= 1.0)) {
        throw Error("invalid_min_similarity");
    }
    if (model == nullptr) {
        for (auto& r : records) {
            r.article_category_unified.reset();
            r.set_verdict("category_model_unavailable", false);
        }
        return;
    }
    for (auto& r : records) {
        if (r.article_category_raw.empty()) {
            r.article_category_unified.reset();
            continue;
        }
        double best = -1.0;
        std::size_t best_idx = 0;
        for (std::size_t i = 0; i < taxonomy.size(); ++i) {
            const double s = model->similarity(r.article_category_raw, taxonomy[i]);
            if (s > best) {  // strict '>' keeps the earliest label on ties
                best = s;
                best_idx = i;
            }
        }
        if (best >= min_similarity) {
            r.article_category_unified = taxonomy[best_idx];
        } else {
            r.article_category_unified.reset();
        }
    }
}

void assign_splits(std::vector<manifest::Record>& records,
                   const SplitRatios& ratios, std::uint64_t seed) {
    const double total = ratios.train + ratios.val + ratios.test;
    if (std::abs(total - 1.0) > 1e-9) throw Error("invalid_split_ratios");
    for (const auto& r : records) {
        if (r.split != manifest::Split::Unassigned) {
            throw Error("split_reassignment", "record " + r.id);
        }
    }
    const std::size_t n = records.size();
    if (n == 0) return;

    // Largest-remainder apportionment: sizes sum to n and are each within
    // one record of ratio * n.
    const double ideal[3] = {ratios.train * n, ratios.val * n, ratios.test * n};
    std::size_t counts[3];
    double frac[3];
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        counts[i] = static_cast<std::size_t>(std::floor(ideal[i]));
        frac[i] = ideal[i] - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    while (assigned < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i) {
            if (frac[i] > frac[best]) best = i;
        }
        counts[best] += 1;
        frac[best] = -1.0;
        ++assigned;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    DetRng rng(derive_seed(seed, "split-shuffle"));
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(order[i - 1], order[j]);
    }

    std::size_t pos = 0;
    const manifest::Split kinds[3] = {manifest::Split::Train,
                                      manifest::Split::Val,
                                      manifest::Split::Test};
    for (int k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < counts[k]; ++i, ++pos) {
            records[order[pos]].split = kinds[k];
        }
    }
}

}  // namespace safeforge::corpus
