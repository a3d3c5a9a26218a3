// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "safeforge/image.hpp"
#include "safeforge/manifest.hpp"

namespace safeforge::models {

// Foundation models (text encoder, diffusion backbone, reward scorers, face
// models, NER, linkers, LLMs) are consumed behind these handles. The toolkit
// ships small deterministic built-ins so every stage runs at desk scale;
// production deployments swap in real backends.

struct NerMention {
    std::string surface;
    std::string type;
    std::size_t begin = 0;
    std::size_t end = 0;
};

class NerBackend {
public:
    virtual ~NerBackend() = default;
    virtual std::vector<NerMention> tag(const std::string& text) const = 0;
    virtual std::string id() const = 0;
};

class SentenceSimilarity {
public:
    virtual ~SentenceSimilarity() = default;
    // Similarity in [0, 1]; 1 for identical inputs.
    virtual double similarity(const std::string& a, const std::string& b) const = 0;
    virtual std::string id() const = 0;
};

class IqaModel {
public:
    virtual ~IqaModel() = default;
    // Reference-free noisiness/sharpness score in [0, 1].
    virtual double score(const img::Image& image) const = 0;
    virtual std::string id() const = 0;
};

class FaceDetector {
public:
    virtual ~FaceDetector() = default;
    virtual std::vector<manifest::FaceBox> detect(const img::Image& image) const = 0;
    virtual std::string id() const = 0;
};

class FaceEmbedder {
public:
    virtual ~FaceEmbedder() = default;
    // Unit-norm embedding of a face crop.
    virtual Eigen::VectorXd embed(const img::Image& face_crop) const = 0;
    virtual int dim() const = 0;
    virtual std::string id() const = 0;
};

struct LinkResult {
    std::string entity_id;
    double confidence = 0.0;
};

class EntityLinker {
public:
    virtual ~EntityLinker() = default;
    virtual std::optional<LinkResult> link(const std::string& surface) const = 0;
    virtual std::string id() const = 0;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    // Returns the raw completion text. Throws Error("llm_unreachable") on
    // transport failure; an empty string is a valid (parse-fallback) reply.
    virtual std::string complete(const std::string& system_prompt,
                                 const std::string& user_prompt) = 0;
    virtual std::string id() const = 0;
};

// Image-caption alignment scorer (reward / preference models share this
// contract; only the weights differ).
class AlignmentScorer {
public:
    virtual ~AlignmentScorer() = default;
    virtual double score(const img::Image& image, const std::string& caption) const = 0;
    virtual std::string id() const = 0;
};

class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual Eigen::VectorXd extract(const img::Image& image) const = 0;
    virtual int dim() const = 0;
    virtual std::string id() const = 0;
};

}  // namespace safeforge::models
