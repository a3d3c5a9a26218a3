// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "safeforge/models.hpp"

namespace safeforge::subjects {

enum class TemplateFamily { StructuredJson, ListStyle };

std::string family_name(TemplateFamily f);
TemplateFamily family_from_name(const std::string& name);

struct PromptTemplate {
    std::string system_prompt;
    std::string user_prompt_format;  // must contain exactly one {caption}
    TemplateFamily family = TemplateFamily::StructuredJson;

    std::string render(const std::string& caption) const;

    static PromptTemplate structured_json();
    static PromptTemplate list_style();
    static PromptTemplate rewrite();

    std::uint64_t hash() const;
};

struct SubjectAnnotation {
    std::string record_id;
    std::optional<std::string> main_subject;
    std::vector<std::string> additional_subjects;
    std::string raw_response;
    std::string llm_id;
    bool fallback_used = false;
    std::vector<std::string> dropped_phrases;

    // Main plus additional, in order, deduplicated.
    std::vector<std::string> phrases() const;
};

// Parses a raw completion into subjects. Never throws: any undecodable
// input yields fallback_used = true with no subjects. Does not validate
// phrases against a caption; see validate_phrases.
SubjectAnnotation parse_subject_response(const std::string& raw,
                                         TemplateFamily family);

// Drops phrases that are not (case-insensitive, whitespace-normalized)
// substrings of the caption and recomputes the fallback flag.
void validate_phrases(SubjectAnnotation& annotation, const std::string& caption);

// Queries the LLM and parses + validates the response. Transport failures
// propagate as Error("llm_unreachable"); parse failures fall back.
SubjectAnnotation extract_subjects(const std::string& record_id,
                                   const std::string& caption,
                                   const PromptTemplate& tpl,
                                   models::LlmClient& client);

// Caption-rewriting baseline: returns a single-sentence instruction
// beginning "Generate an image". Unusable responses fall back to the
// deterministic template.
std::string rewrite_caption(const std::string& caption,
                            models::LlmClient& client);

std::string rewrite_fallback(const std::string& caption);

// Sidecar IO (line-delimited).
void save_sidecar(const std::vector<SubjectAnnotation>& annotations,
                  const std::string& path);
std::vector<SubjectAnnotation> load_sidecar(const std::string& path);

struct RewriteRecord {
    std::string record_id;
    std::string rewrite;
    std::string llm_id;
};

void save_rewrites(const std::vector<RewriteRecord>& rewrites,
                   const std::string& path);
std::vector<RewriteRecord> load_rewrites(const std::string& path);

}  // namespace safeforge::subjects
