// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/subjects.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "safeforge/error.hpp"
#include "safeforge/hash.hpp"
#include "safeforge/text.hpp"

namespace safeforge::subjects {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string family_name(TemplateFamily f) {
    return f == TemplateFamily::StructuredJson ? "structured-json" : "list-style";
}

TemplateFamily family_from_name(const std::string& name) {
    if (name == "structured-json") return TemplateFamily::StructuredJson;
    if (name == "list-style") return TemplateFamily::ListStyle;
    throw Error("unknown_template_family", name);
}

namespace {

constexpr const char* kCaptionPlaceholder = "{caption}";

constexpr const char* kSystemPrompt =
    "You are an AI assistant that follows instructions extremely well. "
    "Help as much as you can.";

constexpr const char* kStructuredUserPrompt =
    "Use only the information provided in the prompt for answering the "
    "question. List the main topic word and additional topic words from the "
    "given image caption in the format: {\"main_topic_word\": "
    "<insert-topic-word-string>, \"additional_topic_words\": "
    "[<insert-topic-word1>, ...]}. Caption Text: {caption}";

constexpr const char* kListUserPrompt =
    "User: List only the main objects from the sentence: {caption}";

constexpr const char* kRewriteUserPrompt =
    "Rewrite the following image caption as a single-sentence instruction "
    "prompt of the format \"Generate an image ...\". Reply with the "
    "instruction only. Caption Text: {caption}";

std::size_t count_placeholders(const std::string& fmt) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = fmt.find(kCaptionPlaceholder, pos)) != std::string::npos) {
        ++count;
        pos += std::char_traits<char>::length(kCaptionPlaceholder);
    }
    return count;
}

}  // namespace

std::string PromptTemplate::render(const std::string& caption) const {
    if (count_placeholders(user_prompt_format) != 1) {
        throw Error("invalid_prompt_template",
                    "expected exactly one {caption} placeholder");
    }
    std::string out = user_prompt_format;
    const auto pos = out.find(kCaptionPlaceholder);
    out.replace(pos, std::char_traits<char>::length(kCaptionPlaceholder), caption);
    return out;
}

PromptTemplate PromptTemplate::structured_json() {
    return {kSystemPrompt, kStructuredUserPrompt, TemplateFamily::StructuredJson};
}

PromptTemplate PromptTemplate::list_style() {
    return {kSystemPrompt, kListUserPrompt, TemplateFamily::ListStyle};
}

PromptTemplate PromptTemplate::rewrite() {
    return {kSystemPrompt, kRewriteUserPrompt, TemplateFamily::ListStyle};
}

std::uint64_t PromptTemplate::hash() const {
    return fnv1a64(user_prompt_format,
                   fnv1a64(system_prompt, fnv1a64(family_name(family))));
}

std::vector<std::string> SubjectAnnotation::phrases() const {
    std::vector<std::string> out;
    auto push_unique = [&](const std::string& p) {
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    };
    if (main_subject) push_unique(*main_subject);
    for (const auto& p : additional_subjects) push_unique(p);
    return out;
}

namespace {

// Cleans one candidate phrase: trims whitespace, surrounding quotes and a
// trailing period. Returns empty when nothing remains.
std::string clean_phrase(std::string s) {
    s = text::trim(s);
    while (s.size() >= 2 &&
           ((s.front() == '"' && s.back() == '"') ||
            (s.front() == '\'' && s.back() == '\''))) {
        s = text::trim(s.substr(1, s.size() - 2));
    }
    while (!s.empty() && (s.back() == '.' || s.back() == ',')) {
        s.pop_back();
        s = text::trim(s);
    }
    return text::normalize_whitespace(s);
}

void add_phrase(std::vector<std::string>& list, const std::string& raw) {
    const std::string p = clean_phrase(raw);
    if (p.empty()) return;
    if (std::find(list.begin(), list.end(), p) == list.end()) list.push_back(p);
}

std::optional<json> try_parse(const std::string& s) {
    if (s.empty()) return std::nullopt;
    json j = json::parse(s, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
}

// Candidate JSON slices in decreasing priority: the full trimmed text, a
// fenced code block, the outermost brace span, and a naive single-quote
// repair of the brace span.
std::optional<json> extract_json_object(const std::string& raw) {
    const std::string trimmed = text::trim(raw);
    if (auto j = try_parse(trimmed); j && j->is_object()) return j;

    const auto fence = trimmed.find("```");
    if (fence != std::string::npos) {
        auto start = trimmed.find('\n', fence);
        const auto end = trimmed.find("```", fence + 3);
        if (start != std::string::npos && end != std::string::npos && start < end) {
            const std::string block = text::trim(trimmed.substr(start, end - start));
            if (auto j = try_parse(block); j && j->is_object()) return j;
        }
    }

    const auto lbrace = trimmed.find('{');
    const auto rbrace = trimmed.rfind('}');
    if (lbrace != std::string::npos && rbrace != std::string::npos &&
        lbrace < rbrace) {
        const std::string slice = trimmed.substr(lbrace, rbrace - lbrace + 1);
        if (auto j = try_parse(slice); j && j->is_object()) return j;

        if (slice.find('\'') != std::string::npos) {
            std::string repaired = slice;
            std::replace(repaired.begin(), repaired.end(), '\'', '"');
            if (auto j = try_parse(repaired); j && j->is_object()) return j;
        }
    }
    return std::nullopt;
}

void parse_structured(const std::string& raw, SubjectAnnotation& out) {
    const auto obj = extract_json_object(raw);
    if (!obj) return;
    if (obj->contains("main_topic_word")) {
        const auto& v = (*obj)["main_topic_word"];
        if (v.is_string()) {
            const std::string p = clean_phrase(v.get<std::string>());
            if (!p.empty()) out.main_subject = p;
        }
    }
    if (obj->contains("additional_topic_words")) {
        const auto& v = (*obj)["additional_topic_words"];
        if (v.is_array()) {
            for (const auto& item : v) {
                if (item.is_string()) {
                    add_phrase(out.additional_subjects, item.get<std::string>());
                }
            }
        } else if (v.is_string()) {
            add_phrase(out.additional_subjects, v.get<std::string>());
        }
    }
}

std::string strip_bullet(const std::string& line) {
    std::string s = text::trim(line);
    if (s.size() >= 2 && (s[0] == '-' || s[0] == '*') && s[1] == ' ') {
        return s.substr(2);
    }
    // "1. item" / "2) item" style numbering
    std::size_t i = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')')) {
        return s.substr(i + 1);
    }
    return s;
}

void parse_list(const std::string& raw, SubjectAnnotation& out) {
    const std::string trimmed = text::trim(raw);
    if (trimmed.empty()) return;

    if (auto j = try_parse(trimmed); j && j->is_array()) {
        for (const auto& item : *j) {
            if (item.is_string()) {
                add_phrase(out.additional_subjects, item.get<std::string>());
            }
        }
        if (!out.additional_subjects.empty()) return;
    }

    std::vector<std::string> content_lines;
    for (const auto& line : text::split(trimmed, '\n')) {
        const std::string s = text::trim(line);
        if (s.empty()) continue;
        if (s.back() == ':') continue;  // prose prelude like "Main objects:"
        content_lines.push_back(s);
    }
    if (content_lines.empty()) return;

    if (content_lines.size() == 1) {
        for (const auto& piece : text::split(content_lines.front(), ',')) {
            add_phrase(out.additional_subjects, strip_bullet(piece));
        }
    } else {
        for (const auto& line : content_lines) {
            add_phrase(out.additional_subjects, strip_bullet(line));
        }
    }
}

}  // namespace

SubjectAnnotation parse_subject_response(const std::string& raw,
                                         TemplateFamily family) {
    SubjectAnnotation out;
    out.raw_response = raw;
    try {
        if (family == TemplateFamily::StructuredJson) {
            parse_structured(raw, out);
        } else {
            parse_list(raw, out);
        }
    } catch (...) {
        // Any surprise from the decoding layers means fallback, never a
        // crash on arbitrary response bytes.
        out.main_subject.reset();
        out.additional_subjects.clear();
    }
    out.fallback_used = !out.main_subject && out.additional_subjects.empty();
    return out;
}

void validate_phrases(SubjectAnnotation& annotation, const std::string& caption) {
    auto locatable = [&](const std::string& phrase) {
        return !text::find_phrase_occurrences(caption, phrase).empty();
    };
    if (annotation.main_subject && !locatable(*annotation.main_subject)) {
        annotation.dropped_phrases.push_back(*annotation.main_subject);
        annotation.main_subject.reset();
    }
    std::vector<std::string> kept;
    for (auto& p : annotation.additional_subjects) {
        if (locatable(p)) {
            kept.push_back(std::move(p));
        } else {
            annotation.dropped_phrases.push_back(std::move(p));
        }
    }
    annotation.additional_subjects = std::move(kept);
    annotation.fallback_used =
        !annotation.main_subject && annotation.additional_subjects.empty();
}

SubjectAnnotation extract_subjects(const std::string& record_id,
                                   const std::string& caption,
                                   const PromptTemplate& tpl,
                                   models::LlmClient& client) {
    if (caption.empty()) throw Error("empty_caption");
    const std::string raw =
        client.complete(tpl.system_prompt, tpl.render(caption));
    SubjectAnnotation out = parse_subject_response(raw, tpl.family);
    validate_phrases(out, caption);
    out.record_id = record_id;
    out.llm_id = client.id();
    return out;
}

std::string rewrite_fallback(const std::string& caption) {
    return "Generate an image of: " + caption;
}

std::string rewrite_caption(const std::string& caption,
                            models::LlmClient& client) {
    if (caption.empty()) throw Error("empty_caption");
    const PromptTemplate tpl = PromptTemplate::rewrite();
    const std::string raw =
        client.complete(tpl.system_prompt, tpl.render(caption));
    std::string line = text::trim(raw);
    const auto nl = line.find('\n');
    if (nl != std::string::npos) line = text::trim(line.substr(0, nl));
    const std::string lowered = text::to_lower_ascii(line);
    if (lowered.rfind("generate an image", 0) == 0) {
        return line;
    }
    return rewrite_fallback(caption);
}

void save_sidecar(const std::vector<SubjectAnnotation>& annotations,
                  const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("sidecar_write_failed", path);
    for (const auto& a : annotations) {
        ojson j;
        j["record_id"] = a.record_id;
        j["main"] = a.main_subject ? ojson(*a.main_subject) : ojson(nullptr);
        j["additional"] = a.additional_subjects;
        j["llm_id"] = a.llm_id;
        j["fallback"] = a.fallback_used;
        j["raw_response"] = a.raw_response;
        j["dropped"] = a.dropped_phrases;
        out << j.dump() << "\n";
    }
}

std::vector<SubjectAnnotation> load_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("sidecar_open_failed", path);
    std::vector<SubjectAnnotation> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        SubjectAnnotation a;
        a.record_id = j.at("record_id").get<std::string>();
        if (j.contains("main") && !j["main"].is_null()) {
            a.main_subject = j["main"].get<std::string>();
        }
        for (const auto& p : j.value("additional", json::array())) {
            a.additional_subjects.push_back(p.get<std::string>());
        }
        a.llm_id = j.value("llm_id", std::string{});
        a.fallback_used = j.value("fallback", false);
        a.raw_response = j.value("raw_response", std::string{});
        for (const auto& p : j.value("dropped", json::array())) {
            a.dropped_phrases.push_back(p.get<std::string>());
        }
        out.push_back(std::move(a));
    }
    return out;
}

void save_rewrites(const std::vector<RewriteRecord>& rewrites,
                   const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("sidecar_write_failed", path);
    for (const auto& r : rewrites) {
        ojson j;
        j["record_id"] = r.record_id;
        j["rewrite"] = r.rewrite;
        j["llm_id"] = r.llm_id;
        out << j.dump() << "\n";
    }
}

std::vector<RewriteRecord> load_rewrites(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("sidecar_open_failed", path);
    std::vector<RewriteRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        out.push_back({j.at("record_id").get<std::string>(),
                       j.at("rewrite").get<std::string>(),
                       j.value("llm_id", std::string{})});
    }
    return out;
}

}  // namespace safeforge::subjects
