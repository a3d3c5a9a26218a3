// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safeforge::text {

bool utf8_valid(std::string_view s);

std::string to_lower_ascii(std::string_view s);

// Collapses runs of whitespace to a single space and trims the ends.
std::string normalize_whitespace(std::string_view s);

std::string trim(std::string_view s);

// Word tokens for the minimum-length rule: whitespace-delimited pieces with
// every non-alphanumeric byte stripped; pieces that end up empty do not
// count. "clothing," -> "clothing", "don't" -> "dont".
std::vector<std::string> word_tokens(std::string_view s);

std::size_t word_count(std::string_view s);

// Light rule-based English lemmatizer for corpus statistics. Lowercases and
// strips common inflection suffixes; intentionally small and deterministic.
std::string lemmatize(std::string_view word);

// Case-insensitive, whitespace-normalized occurrences of `needle` inside
// `haystack`. A whitespace run in the needle matches any whitespace run in
// the haystack. Returned [begin, end) spans index the ORIGINAL haystack.
struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};
std::vector<CharSpan> find_phrase_occurrences(std::string_view haystack,
                                              std::string_view needle);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace safeforge::text
