// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safeforge/grounding.hpp"
#include "safeforge/image.hpp"
#include "safeforge/models.hpp"

namespace safeforge::metrics {

// Feature matrix (n x d) with lazily computed Gaussian summary. Covariance
// uses the unbiased (n-1) estimator and is symmetrized.
class FeatureSet {
public:
    FeatureSet(Eigen::MatrixXd features, std::string extractor_id);

    const Eigen::MatrixXd& features() const { return features_; }
    const std::string& extractor_id() const { return extractor_id_; }
    Eigen::Index count() const { return features_.rows(); }
    Eigen::Index dim() const { return features_.cols(); }

    const Eigen::VectorXd& mean() const;
    const Eigen::MatrixXd& covariance() const;

    static FeatureSet from_images(const std::vector<img::Image>& images,
                                  const models::FeatureExtractor& extractor);

private:
    Eigen::MatrixXd features_;
    std::string extractor_id_;
    mutable std::optional<Eigen::VectorXd> mean_;
    mutable std::optional<Eigen::MatrixXd> covariance_;
};

// Fréchet distance between Gaussian fits:
// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^(1/2)), with the matrix square
// root taken through symmetric eigendecompositions, negative eigenvalues
// clamped to zero.
double frechet_distance(const FeatureSet& a, const FeatureSet& b);

// Symmetric PSD square root used by the metric; exposed for tests.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& symmetric);

struct AlignmentResult {
    std::vector<double> per_sample;
    double mean = 0.0;
};

AlignmentResult score_alignment(const std::vector<img::Image>& images,
                                const std::vector<std::string>& captions,
                                const models::AlignmentScorer& scorer);

struct EntityMetricsResult {
    double detect_accuracy = 0.0;  // fraction of images with >= 1 face
    std::optional<double> identity_preservation;
};

// Per Appendix-style face evaluation: detection accuracy plus the mean of
// per-image max cosine similarity against each record's reference
// embedding (greedy = argmax over detected faces).
EntityMetricsResult entity_metrics(
    const std::vector<img::Image>& images,
    const std::vector<const grounding::EntityProfile*>& profiles,
    const models::FaceDetector& detector, const models::FaceEmbedder& embedder);

struct EvalReport {
    std::optional<double> fid;
    std::optional<double> image_reward_mean;
    std::optional<double> hps_mean;
    std::optional<double> detect_accuracy;
    std::optional<double> identity_preservation;
    std::size_t sample_count = 0;
    std::vector<std::uint64_t> seeds;
    std::map<std::string, std::string> provenance;
};

std::string report_to_json_line(const EvalReport& report);
EvalReport report_from_json_line(const std::string& line);

// Scalar metrics averaged across per-seed reports; provenance merged.
EvalReport average_reports(const std::vector<EvalReport>& runs);

// Human-readable table, columns ordered FID / ImageReward / HPS.
std::string render_table(const EvalReport& report);

// Regularized upper incomplete gamma Q(a, x) and the chi-square upper tail
// probability; used by uniformity checks.
double gamma_q(double a, double x);
double chi_square_pvalue(double statistic, int dof);

}  // namespace safeforge::metrics
