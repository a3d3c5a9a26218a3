// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "safeforge/error.hpp"

namespace safeforge::metrics {

using json = nlohmann::ordered_json;

FeatureSet::FeatureSet(Eigen::MatrixXd features, std::string extractor_id)
    : features_(std::move(features)), extractor_id_(std::move(extractor_id)) {}

const Eigen::VectorXd& FeatureSet::mean() const {
    if (!mean_) {
        mean_ = features_.colwise().mean().transpose();
    }
    return *mean_;
}

const Eigen::MatrixXd& FeatureSet::covariance() const {
    if (!covariance_) {
        if (count() < 2) {
            throw Error("insufficient_samples", "covariance needs n >= 2");
        }
        const Eigen::MatrixXd centered = features_.rowwise() - mean().transpose();
        Eigen::MatrixXd cov = centered.transpose() * centered /
                              static_cast<double>(count() - 1);
        covariance_ = ((cov + cov.transpose()) / 2.0).eval();
    }
    return *covariance_;
}

FeatureSet FeatureSet::from_images(const std::vector<img::Image>& images,
                                   const models::FeatureExtractor& extractor) {
    if (images.empty()) throw Error("empty_feature_set");
    Eigen::MatrixXd f(static_cast<Eigen::Index>(images.size()), extractor.dim());
    for (std::size_t i = 0; i < images.size(); ++i) {
        f.row(static_cast<Eigen::Index>(i)) = extractor.extract(images[i]).transpose();
    }
    return FeatureSet(std::move(f), extractor.id());
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
    if (solver.info() != Eigen::Success) {
        throw Error("eigendecomposition_failed");
    }
    Eigen::VectorXd eigenvalues = solver.eigenvalues();
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        eigenvalues[i] = eigenvalues[i] > 0.0 ? std::sqrt(eigenvalues[i]) : 0.0;
    }
    return solver.eigenvectors() * eigenvalues.asDiagonal() *
           solver.eigenvectors().transpose();
}

double frechet_distance(const FeatureSet& a, const FeatureSet& b) {
    if (a.dim() != b.dim()) throw Error("feature_dim_mismatch");
    if (a.count() < 2 || b.count() < 2) {
        throw Error("insufficient_samples", "need n >= 2 per set");
    }
    const Eigen::VectorXd mean_diff = a.mean() - b.mean();
    const Eigen::MatrixXd& cov_a = a.covariance();
    const Eigen::MatrixXd& cov_b = b.covariance();

    const Eigen::MatrixXd root_a = psd_sqrt(cov_a);
    Eigen::MatrixXd inner = root_a * cov_b * root_a;
    inner = ((inner + inner.transpose()) / 2.0).eval();
    const Eigen::MatrixXd cross_root = psd_sqrt(inner);

    return mean_diff.squaredNorm() + cov_a.trace() + cov_b.trace() -
           2.0 * cross_root.trace();
}

AlignmentResult score_alignment(const std::vector<img::Image>& images,
                                const std::vector<std::string>& captions,
                                const models::AlignmentScorer& scorer) {
    if (images.size() != captions.size()) {
        throw Error("count_mismatch", "images vs captions");
    }
    if (images.empty()) throw Error("empty_alignment_batch");
    AlignmentResult out;
    out.per_sample.reserve(images.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const double s = scorer.score(images[i], captions[i]);
        out.per_sample.push_back(s);
        sum += s;
    }
    out.mean = sum / static_cast<double>(images.size());
    return out;
}

EntityMetricsResult entity_metrics(
    const std::vector<img::Image>& images,
    const std::vector<const grounding::EntityProfile*>& profiles,
    const models::FaceDetector& detector, const models::FaceEmbedder& embedder) {
    if (images.size() != profiles.size()) {
        throw Error("count_mismatch", "images vs profiles");
    }
    if (images.empty()) throw Error("empty_entity_batch");

    std::size_t with_face = 0;
    double sim_sum = 0.0;
    std::size_t sim_count = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto faces = detector.detect(images[i]);
        if (faces.empty()) continue;
        ++with_face;
        if (profiles[i] == nullptr) continue;
        double best = -2.0;
        for (const auto& f : faces) {
            const Eigen::VectorXd e =
                embedder.embed(grounding::eval_face_crop(images[i], f.box));
            const double sim = e.dot(profiles[i]->reference_embedding);
            if (sim > best) best = sim;
        }
        sim_sum += best;
        ++sim_count;
    }

    EntityMetricsResult out;
    out.detect_accuracy =
        static_cast<double>(with_face) / static_cast<double>(images.size());
    if (sim_count > 0) {
        out.identity_preservation = sim_sum / static_cast<double>(sim_count);
    }
    return out;
}

namespace {

json opt_to_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<double> opt_from_json(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

}  // namespace

std::string report_to_json_line(const EvalReport& report) {
    json j;
    j["fid"] = opt_to_json(report.fid);
    j["image_reward_mean"] = opt_to_json(report.image_reward_mean);
    j["hps_mean"] = opt_to_json(report.hps_mean);
    j["detect_accuracy"] = opt_to_json(report.detect_accuracy);
    j["identity_preservation"] = opt_to_json(report.identity_preservation);
    j["sample_count"] = report.sample_count;
    j["seeds"] = report.seeds;
    j["provenance"] = report.provenance;
    return j.dump();
}

EvalReport report_from_json_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw Error("report_parse_failed", e.what());
    }
    EvalReport r;
    r.fid = opt_from_json(j, "fid");
    r.image_reward_mean = opt_from_json(j, "image_reward_mean");
    r.hps_mean = opt_from_json(j, "hps_mean");
    r.detect_accuracy = opt_from_json(j, "detect_accuracy");
    r.identity_preservation = opt_from_json(j, "identity_preservation");
    r.sample_count = j.value("sample_count", std::size_t{0});
    for (const auto& s : j.value("seeds", json::array())) {
        r.seeds.push_back(s.get<std::uint64_t>());
    }
    if (j.contains("provenance")) {
        for (const auto& [k, v] : j["provenance"].items()) {
            r.provenance[k] = v.get<std::string>();
        }
    }
    return r;
}

EvalReport average_reports(const std::vector<EvalReport>& runs) {
    if (runs.empty()) throw Error("empty_report_list");
    EvalReport out;
    auto average_field = [&](auto getter) -> std::optional<double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : runs) {
            if (const auto v = getter(r)) {
                sum += *v;
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    };
    out.fid = average_field([](const EvalReport& r) { return r.fid; });
    out.image_reward_mean =
        average_field([](const EvalReport& r) { return r.image_reward_mean; });
    out.hps_mean = average_field([](const EvalReport& r) { return r.hps_mean; });
    out.detect_accuracy =
        average_field([](const EvalReport& r) { return r.detect_accuracy; });
    out.identity_preservation = average_field(
        [](const EvalReport& r) { return r.identity_preservation; });
    for (const auto& r : runs) {
        out.sample_count += r.sample_count;
        out.seeds.insert(out.seeds.end(), r.seeds.begin(), r.seeds.end());
        for (const auto& [k, v] : r.provenance) out.provenance[k] = v;
    }
    return out;
}

std::string render_table(const EvalReport& report) {
    auto cell = [](const std::optional<double>& v) {
        if (!v) return std::string("--");
        std::ostringstream os;
        os.precision(4);
        os << std::fixed << *v;
        return os.str();
    };
    std::ostringstream os;
    os << "| FID_CLIP | ImageReward | HPS V2 |";
    const bool entity = report.detect_accuracy.has_value() ||
                        report.identity_preservation.has_value();
    if (entity) os << " Detect | Identity |";
    os << "\n";
    os << "|----------|-------------|--------|";
    if (entity) os << "--------|----------|";
    os << "\n";
    os << "| " << cell(report.fid) << " | " << cell(report.image_reward_mean)
       << " | " << cell(report.hps_mean) << " |";
    if (entity) {
        os << " " << cell(report.detect_accuracy) << " | "
           << cell(report.identity_preservation) << " |";
    }
    os << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Incomplete gamma (series + continued fraction, double precision)
// ---------------------------------------------------------------------------

namespace {

double gamma_p_series(double a, double x) {
    double sum = 1.0 / a;
    double term = sum;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_continued_fraction(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw Error("invalid_gamma_args");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) {
        return 1.0 - gamma_p_series(a, x);
    }
    return gamma_q_continued_fraction(a, x);
}

double chi_square_pvalue(double statistic, int dof) {
    if (dof < 1) throw Error("invalid_dof");
    if (statistic < 0.0) return 1.0;
    return gamma_q(dof / 2.0, statistic / 2.0);
}

}  // namespace safeforge::metrics
