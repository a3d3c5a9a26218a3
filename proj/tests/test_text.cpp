// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "safeforge/text.hpp"

using namespace safeforge;

TEST_CASE("word_count strips punctuation and splits on whitespace") {
    CHECK(text::word_count("The school offers clothing, including shoes, to "
                           "its students.") == 9);
    CHECK(text::word_count("one two three four five") == 5);
    CHECK(text::word_count("don't stop") == 2);
    CHECK(text::word_count("  ") == 0);
    CHECK(text::word_count("...") == 0);
    CHECK(text::word_count("a-b") == 1);  // punctuation stripped, "ab" remains
}

TEST_CASE("utf8 validation") {
    CHECK(text::utf8_valid("plain ascii"));
    CHECK(text::utf8_valid("caf\xc3\xa9"));
    CHECK(text::utf8_valid("\xe2\x82\xac"));  // euro sign
    CHECK_FALSE(text::utf8_valid("\xff\xfe"));
    CHECK_FALSE(text::utf8_valid("trunc \xc3"));
    CHECK_FALSE(text::utf8_valid("\xed\xa0\x80"));  // surrogate
}

TEST_CASE("lemmatize light rules") {
    CHECK(text::lemmatize("Cities") == "city");
    CHECK(text::lemmatize("boxes") == "box");
    CHECK(text::lemmatize("shoes") == "shoe");
    CHECK(text::lemmatize("glass") == "glass");
    CHECK(text::lemmatize("bus") == "bus");
    CHECK(text::lemmatize("Dogs") == "dog");
}

TEST_CASE("phrase occurrences are case and whitespace insensitive") {
    const auto spans = text::find_phrase_occurrences("A Bronze  Tiger statue",
                                                     "bronze tiger");
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].begin == 2);
    CHECK(spans[0].end == 15);

    const auto twice = text::find_phrase_occurrences("dog park near dog house", "dog");
    CHECK(twice.size() == 2);

    CHECK(text::find_phrase_occurrences("nothing here", "zebra").empty());
    CHECK(text::find_phrase_occurrences("text", "").empty());
}

TEST_CASE("normalize_whitespace") {
    CHECK(text::normalize_whitespace("  a \t b\n c  ") == "a b c");
    CHECK(text::normalize_whitespace("") == "");
}
