// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/text.hpp"

#include <cctype>

namespace safeforge::text {

namespace {

inline bool is_space(unsigned char c) { return std::isspace(c) != 0; }
inline bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }
inline char lower(unsigned char c) {
    return static_cast<char>(std::tolower(c));
}

}  // namespace

bool utf8_valid(std::string_view s) {
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len;
        if (c < 0x80) {
            len = 1;
        } else if ((c & 0xe0) == 0xc0) {
            len = 2;
            if (c < 0xc2) return false;  // overlong
        } else if ((c & 0xf0) == 0xe0) {
            len = 3;
        } else if ((c & 0xf8) == 0xf0) {
            len = 4;
            if (c > 0xf4) return false;  // beyond U+10FFFF
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (std::size_t k = 1; k < len; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) & 0xc0) != 0x80) {
                return false;
            }
        }
        // Minimal surrogate / overlong checks for 3- and 4-byte forms.
        if (len == 3) {
            const auto c1 = static_cast<unsigned char>(s[i + 1]);
            if (c == 0xe0 && c1 < 0xa0) return false;
            if (c == 0xed && c1 >= 0xa0) return false;  // UTF-16 surrogates
        }
        if (len == 4) {
            const auto c1 = static_cast<unsigned char>(s[i + 1]);
            if (c == 0xf0 && c1 < 0x90) return false;
            if (c == 0xf4 && c1 >= 0x90) return false;
        }
        i += len;
    }
    return true;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(lower(static_cast<unsigned char>(c)));
    return out;
}

std::string normalize_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // leading whitespace is dropped
    for (char c : s) {
        if (is_space(static_cast<unsigned char>(c))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(c);
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string piece;
    auto flush = [&] {
        if (!piece.empty()) {
            out.push_back(piece);
            piece.clear();
        }
    };
    for (char c : s) {
        const auto uc = static_cast<unsigned char>(c);
        if (is_space(uc)) {
            flush();
        } else if (is_alnum(uc)) {
            piece.push_back(lower(uc));
        }
        // Non-alphanumeric, non-space bytes are stripped.
    }
    flush();
    return out;
}

std::size_t word_count(std::string_view s) { return word_tokens(s).size(); }

std::string lemmatize(std::string_view word) {
    std::string w = to_lower_ascii(word);
    const auto ends_with = [&](std::string_view suf) {
        return w.size() >= suf.size() &&
               w.compare(w.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (w.size() > 4 && ends_with("ies")) {
        w.replace(w.size() - 3, 3, "y");
    } else if (w.size() > 4 &&
               (ends_with("sses") || ends_with("xes") || ends_with("zes") ||
                ends_with("ches") || ends_with("shes"))) {
        w.erase(w.size() - 2);
    } else if (w.size() > 3 && ends_with("s") && !ends_with("ss") &&
               !ends_with("us") && !ends_with("is")) {
        w.pop_back();
    }
    return w;
}

std::vector<CharSpan> find_phrase_occurrences(std::string_view haystack,
                                              std::string_view needle) {
    std::vector<CharSpan> spans;
    const std::string needle_norm = normalize_whitespace(to_lower_ascii(needle));
    if (needle_norm.empty()) return spans;

    const std::size_t n = haystack.size();
    for (std::size_t start = 0; start < n; ++start) {
        std::size_t hi = start;
        std::size_t ni = 0;
        while (ni < needle_norm.size() && hi < n) {
            const auto hc = static_cast<unsigned char>(haystack[hi]);
            const char nc = needle_norm[ni];
            if (nc == ' ') {
                if (!is_space(hc)) break;
                while (hi < n &&
                       is_space(static_cast<unsigned char>(haystack[hi]))) {
                    ++hi;
                }
                ++ni;
            } else {
                if (lower(hc) != nc) break;
                ++hi;
                ++ni;
            }
        }
        if (ni == needle_norm.size()) {
            spans.push_back({start, hi});
        }
    }
    return spans;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace safeforge::text
