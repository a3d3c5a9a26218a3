// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/builtin_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "safeforge/error.hpp"
#include "safeforge/hash.hpp"
#include "safeforge/text.hpp"

namespace safeforge::builtin {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// GazetteerNer
// ---------------------------------------------------------------------------

namespace {

// Word pieces with char offsets, punctuation kept out of the words.
struct WordPiece {
    std::string lower;
    std::size_t begin;
    std::size_t end;
};

std::vector<WordPiece> word_pieces(const std::string& s) {
    std::vector<WordPiece> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        if (std::isalnum(c)) {
            std::size_t j = i;
            std::string lower;
            while (j < s.size() &&
                   std::isalnum(static_cast<unsigned char>(s[j]))) {
                lower.push_back(static_cast<char>(
                    std::tolower(static_cast<unsigned char>(s[j]))));
                ++j;
            }
            out.push_back({std::move(lower), i, j});
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

std::vector<std::string> normalized_words(const std::string& s) {
    std::vector<std::string> words;
    for (const auto& p : word_pieces(s)) words.push_back(p.lower);
    return words;
}

}  // namespace

GazetteerNer::GazetteerNer(const std::string& dictionary_path) {
    std::ifstream in(dictionary_path);
    if (!in) throw Error("ner_backend_unavailable", dictionary_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        add(j.at("surface").get<std::string>(), j.at("type").get<std::string>());
    }
}

void GazetteerNer::add(const std::string& surface, const std::string& type) {
    auto words = normalized_words(surface);
    if (words.empty()) return;
    max_words_ = std::max(max_words_, words.size());
    entries_[std::move(words)] = type;
}

std::vector<models::NerMention> GazetteerNer::tag(const std::string& text) const {
    std::vector<models::NerMention> out;
    const auto pieces = word_pieces(text);
    std::size_t i = 0;
    while (i < pieces.size()) {
        std::size_t matched = 0;
        const std::string* matched_type = nullptr;
        std::vector<std::string> window;
        for (std::size_t len = 1; len <= max_words_ && i + len <= pieces.size();
             ++len) {
            window.push_back(pieces[i + len - 1].lower);
            const auto it = entries_.find(window);
            if (it != entries_.end()) {
                matched = len;  // longest match wins
                matched_type = &it->second;
            }
        }
        if (matched > 0) {
            const std::size_t b = pieces[i].begin;
            const std::size_t e = pieces[i + matched - 1].end;
            out.push_back({text.substr(b, e - b), *matched_type, b, e});
            i += matched;
        } else {
            ++i;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// TokenOverlapSimilarity
// ---------------------------------------------------------------------------

double TokenOverlapSimilarity::similarity(const std::string& a,
                                          const std::string& b) const {
    std::map<std::string, double> va;
    std::map<std::string, double> vb;
    for (const auto& t : text::word_tokens(a)) va[text::lemmatize(t)] += 1.0;
    for (const auto& t : text::word_tokens(b)) vb[text::lemmatize(t)] += 1.0;
    if (va.empty() || vb.empty()) return a == b ? 1.0 : 0.0;
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [k, v] : va) {
        na += v * v;
        const auto it = vb.find(k);
        if (it != vb.end()) dot += v * it->second;
    }
    for (const auto& [k, v] : vb) nb += v * v;
    return dot / std::sqrt(na * nb);
}

// ---------------------------------------------------------------------------
// AliasLinker
// ---------------------------------------------------------------------------

namespace {

std::string normalize_alias(const std::string& s) {
    std::string out;
    for (const auto& w : normalized_words(s)) {
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    return out;
}

}  // namespace

AliasLinker::AliasLinker(const std::string& kb_snapshot_path) {
    std::ifstream in(kb_snapshot_path);
    if (!in) throw Error("kb_snapshot_missing", kb_snapshot_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        const auto entity_id = j.at("entity_id").get<std::string>();
        const auto display = j.value("display_name", entity_id);
        display_names_[entity_id] = display;
        std::vector<std::string> aliases;
        aliases.push_back(display);
        if (j.contains("aliases")) {
            for (const auto& a : j["aliases"]) {
                aliases.push_back(a.get<std::string>());
            }
        }
        for (const auto& alias : aliases) {
            const std::string key = normalize_alias(alias);
            if (key.empty()) continue;
            const auto it = aliases_.find(key);
            if (it == aliases_.end()) {
                aliases_[key] = {entity_id, 1.0};
            } else if (it->second.entity_id != entity_id) {
                it->second.confidence = 0.5;  // ambiguous alias, first entity kept
            }
        }
    }
}

std::optional<models::LinkResult> AliasLinker::link(const std::string& surface) const {
    const auto it = aliases_.find(normalize_alias(surface));
    if (it == aliases_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// TinyIqa
// ---------------------------------------------------------------------------

double TinyIqa::score(const img::Image& image) const {
    if (image.empty()) throw Error("empty_image");
    const img::Image g = img::to_gray(image);
    if (g.width < 3 || g.height < 3) return 0.0;

    double lap_sum = 0.0;
    double res_sum = 0.0;
    std::int64_t count = 0;
    std::uint8_t window[9];
    for (int y = 1; y < g.height - 1; ++y) {
        for (int x = 1; x < g.width - 1; ++x) {
            const int c = g.at(x, y);
            const int lap = 4 * c - g.at(x - 1, y) - g.at(x + 1, y) -
                            g.at(x, y - 1) - g.at(x, y + 1);
            lap_sum += std::abs(lap);

            int k = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    window[k++] = g.at(x + dx, y + dy);
                }
            }
            std::nth_element(window, window + 4, window + 9);
            res_sum += std::abs(c - static_cast<int>(window[4]));
            ++count;
        }
    }
    const double sharpness = lap_sum / static_cast<double>(count);
    const double noisiness = res_sum / static_cast<double>(count);
    const double s_term = sharpness / (sharpness + 2.0);
    const double n_term = 1.0 - noisiness / (noisiness + 6.0);
    return std::clamp(s_term * n_term, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Synthetic face pattern + detector + embedder
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint8_t kFaceValue = 200;
constexpr std::uint8_t kFeatureValue = 50;

void fill_disc(img::Image& image, double cx, double cy, double r,
               std::uint8_t value) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    const int x1 = std::min(image.width - 1, static_cast<int>(std::ceil(cx + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    const int y1 = std::min(image.height - 1, static_cast<int>(std::ceil(cy + r)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            if (dx * dx + dy * dy <= r * r) {
                for (int c = 0; c < image.channels; ++c) image.at(x, y, c) = value;
            }
        }
    }
}

}  // namespace

void paint_face(img::Image& image, const img::Box& box, int identity) {
    const double cx = box.x + box.w / 2.0;
    const double cy = box.y + box.h / 2.0;
    const double ax = box.w / 2.0;
    const double ay = box.h / 2.0;
    const int x0 = std::max(0, box.x);
    const int x1 = std::min(image.width - 1, box.x + box.w - 1);
    const int y0 = std::max(0, box.y);
    const int y1 = std::min(image.height - 1, box.y + box.h - 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double nx = (x + 0.5 - cx) / ax;
            const double ny = (y + 0.5 - cy) / ay;
            if (nx * nx + ny * ny <= 1.0) {
                for (int c = 0; c < image.channels; ++c) {
                    image.at(x, y, c) = kFaceValue;
                }
            }
        }
    }
    // Identity shifts the feature geometry.
    const double eye_dx = box.w * (0.20 + 0.03 * (identity % 3));
    const double eye_dy = box.h * (0.16 + 0.03 * ((identity / 3) % 3));
    const double eye_r = std::max(1.0, std::min(box.w, box.h) / 10.0);
    fill_disc(image, cx - eye_dx, cy - eye_dy, eye_r, kFeatureValue);
    fill_disc(image, cx + eye_dx, cy - eye_dy, eye_r, kFeatureValue);

    const double mouth_half = box.w * (0.18 + 0.02 * (identity % 2));
    const double mouth_y = cy + box.h * 0.24;
    const int mh = std::max(1, box.h / 12);
    for (int y = static_cast<int>(mouth_y); y < static_cast<int>(mouth_y) + mh; ++y) {
        for (int x = static_cast<int>(cx - mouth_half);
             x <= static_cast<int>(cx + mouth_half); ++x) {
            if (x >= 0 && x < image.width && y >= 0 && y < image.height) {
                for (int c = 0; c < image.channels; ++c) {
                    image.at(x, y, c) = kFeatureValue;
                }
            }
        }
    }
}

std::vector<manifest::FaceBox> TinyFaceDetector::detect(const img::Image& image) const {
    if (image.empty()) throw Error("empty_image");
    const img::Image g = img::to_gray(image);
    const int w = g.width;
    const int h = g.height;
    std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
    auto in_band = [&](int x, int y) {
        const int v = g.at(x, y);
        return v >= 188 && v <= 212;
    };

    std::vector<manifest::FaceBox> out;
    std::vector<std::pair<int, int>> stack;
    int next_label = 0;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            if (!in_band(sx, sy) || label[static_cast<std::size_t>(sy) * w + sx] >= 0) {
                continue;
            }
            // Flood fill one component.
            int minx = sx, maxx = sx, miny = sy, maxy = sy;
            std::int64_t area = 0;
            stack.clear();
            stack.emplace_back(sx, sy);
            label[static_cast<std::size_t>(sy) * w + sx] = next_label;
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                ++area;
                minx = std::min(minx, x);
                maxx = std::max(maxx, x);
                miny = std::min(miny, y);
                maxy = std::max(maxy, y);
                const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
                for (const auto& n : nbr) {
                    const int nx = n[0];
                    const int ny = n[1];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    auto& l = label[static_cast<std::size_t>(ny) * w + nx];
                    if (l < 0 && in_band(nx, ny)) {
                        l = next_label;
                        stack.emplace_back(nx, ny);
                    }
                }
            }
            ++next_label;
            if (area < 40) continue;
            const int bw = maxx - minx + 1;
            const int bh = maxy - miny + 1;
            const double fill =
                static_cast<double>(area) / (static_cast<double>(bw) * bh);
            if (fill < 0.5 || fill > 0.92) continue;
            std::int64_t dark = 0;
            for (int y = miny; y <= maxy; ++y) {
                for (int x = minx; x <= maxx; ++x) {
                    if (g.at(x, y) < 80) ++dark;
                }
            }
            const double dark_ratio =
                static_cast<double>(dark) / (static_cast<double>(bw) * bh);
            if (dark_ratio < 0.01 || dark_ratio > 0.35) continue;
            const double shape_score =
                std::clamp(1.0 - std::abs(fill - 0.72) / 0.28, 0.0, 1.0);
            const double feature_score = std::clamp(dark_ratio / 0.02, 0.0, 1.0);
            const double confidence = shape_score * feature_score;
            if (confidence <= 0.05) continue;
            out.push_back({img::Box{minx, miny, bw, bh}, confidence});
        }
    }
    // Deterministic order: scan order already is row-major by component
    // start; keep it.
    return out;
}

Eigen::VectorXd TinyFaceEmbedder::embed(const img::Image& face_crop) const {
    if (face_crop.empty()) throw Error("empty_face_box");
    const img::Image g = img::resize_bilinear(img::to_gray(face_crop), 16, 16);
    Eigen::VectorXd v(256);
    double mean = 0.0;
    int inside = 0;
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            const double dx = (x + 0.5 - 8.0) / 8.0;
            const double dy = (y + 0.5 - 8.0) / 8.0;
            const bool in_circle = dx * dx + dy * dy <= 1.0;
            const double val = in_circle ? g.at(x, y) / 255.0 : 0.0;
            v[y * 16 + x] = val;
            if (in_circle) {
                mean += val;
                ++inside;
            }
        }
    }
    mean /= std::max(1, inside);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            const double dx = (x + 0.5 - 8.0) / 8.0;
            const double dy = (y + 0.5 - 8.0) / 8.0;
            if (dx * dx + dy * dy <= 1.0) v[y * 16 + x] -= mean;
        }
    }
    const double norm = v.norm();
    if (norm < 1e-12) {
        v.setZero();
        v[0] = 1.0;
        return v;
    }
    return v / norm;
}

// ---------------------------------------------------------------------------
// TinyAutoencoder + caption targets + scorers
// ---------------------------------------------------------------------------

LatentShape TinyAutoencoder::shape_for(int width, int height) const {
    if (width % kFactor != 0 || height % kFactor != 0) {
        throw Error("latent_shape_invalid",
                    "image dimensions must be multiples of 8");
    }
    return LatentShape{height / kFactor, width / kFactor, 3};
}

Eigen::MatrixXd TinyAutoencoder::encode(const img::Image& image) const {
    const img::Image rgb = img::to_rgb(image);
    const LatentShape shape = shape_for(rgb.width, rgb.height);
    Eigen::MatrixXd latent(shape.tokens(), 3);
    for (int br = 0; br < shape.block_rows; ++br) {
        for (int bc = 0; bc < shape.block_cols; ++bc) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int y = 0; y < kFactor; ++y) {
                    for (int x = 0; x < kFactor; ++x) {
                        acc += rgb.at(bc * kFactor + x, br * kFactor + y, c);
                    }
                }
                const double mean = acc / (kFactor * kFactor);
                latent(br * shape.block_cols + bc, c) = mean / 127.5 - 1.0;
            }
        }
    }
    return latent;
}

img::Image TinyAutoencoder::decode(const Eigen::MatrixXd& latent,
                                   const LatentShape& shape) const {
    if (latent.rows() != shape.tokens() || latent.cols() != shape.channels) {
        throw Error("latent_shape_invalid");
    }
    img::Image out(shape.block_cols * kFactor, shape.block_rows * kFactor, 3);
    for (int br = 0; br < shape.block_rows; ++br) {
        for (int bc = 0; bc < shape.block_cols; ++bc) {
            for (int c = 0; c < 3; ++c) {
                const double v = latent(br * shape.block_cols + bc, c);
                const double px = std::clamp((v + 1.0) * 127.5, 0.0, 255.0);
                const auto byte = static_cast<std::uint8_t>(std::lround(px));
                for (int y = 0; y < kFactor; ++y) {
                    for (int x = 0; x < kFactor; ++x) {
                        out.at(bc * kFactor + x, br * kFactor + y, c) = byte;
                    }
                }
            }
        }
    }
    return out;
}

Eigen::MatrixXd caption_target_latent(const std::string& caption,
                                      const LatentShape& shape,
                                      const std::string& salt) {
    DetRng rng(derive_seed(fnv1a64(caption), salt));
    Eigen::MatrixXd target(shape.tokens(), shape.channels);
    for (Eigen::Index r = 0; r < target.rows(); ++r) {
        for (Eigen::Index c = 0; c < target.cols(); ++c) {
            target(r, c) = 2.0 * rng.next_double() - 1.0;
        }
    }
    return target;
}

double TinyAlignmentScorer::score(const img::Image& image,
                                  const std::string& caption) const {
    const TinyAutoencoder ae;
    const Eigen::MatrixXd z = ae.encode(image);
    const LatentShape shape = ae.shape_for(image.width, image.height);
    const Eigen::MatrixXd t = caption_target_latent(caption, shape, "reward-target");
    const double mse = (z - t).squaredNorm() / static_cast<double>(z.size());
    return 1.0 - mse;
}

double TinyPreferenceScorer::score(const img::Image& image,
                                   const std::string& caption) const {
    const TinyAutoencoder ae;
    const Eigen::MatrixXd z = ae.encode(image);
    const LatentShape shape = ae.shape_for(image.width, image.height);
    const Eigen::MatrixXd t =
        caption_target_latent(caption, shape, "preference-target");
    const double denom = z.norm() * t.norm();
    if (denom < 1e-12) return 0.5;
    const double cosine =
        (z.array() * t.array()).sum() / denom;
    return 0.5 * (1.0 + cosine);
}

Eigen::VectorXd TinyFeatureExtractor::extract(const img::Image& image) const {
    if (image.empty()) throw Error("empty_image");
    const img::Image rgb = img::to_rgb(image);
    const img::Image g = img::to_gray(rgb);
    Eigen::VectorXd f(16);
    f.setZero();

    double mean = 0.0;
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) mean += g.at(x, y);
    }
    const double n = static_cast<double>(g.width) * g.height;
    mean /= n;
    double var = 0.0;
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            const double d = g.at(x, y) - mean;
            var += d * d;
        }
    }
    f[0] = mean / 255.0;
    f[1] = std::sqrt(var / n) / 255.0;

    for (int c = 0; c < 3; ++c) {
        double cm = 0.0;
        for (int y = 0; y < rgb.height; ++y) {
            for (int x = 0; x < rgb.width; ++x) cm += rgb.at(x, y, c);
        }
        f[2 + c] = cm / n / 255.0;
    }

    double grad_mean = 0.0;
    double grad_sq = 0.0;
    double edge_frac = 0.0;
    std::int64_t gcount = 0;
    for (int y = 0; y < g.height - 1; ++y) {
        for (int x = 0; x < g.width - 1; ++x) {
            const double gx = g.at(x + 1, y) - g.at(x, y);
            const double gy = g.at(x, y + 1) - g.at(x, y);
            const double m = std::sqrt(gx * gx + gy * gy);
            grad_mean += m;
            grad_sq += m * m;
            if (m > 32.0) edge_frac += 1.0;
            ++gcount;
        }
    }
    if (gcount > 0) {
        grad_mean /= static_cast<double>(gcount);
        const double gvar = grad_sq / static_cast<double>(gcount) - grad_mean * grad_mean;
        f[5] = grad_mean / 255.0;
        f[6] = std::sqrt(std::max(0.0, gvar)) / 255.0;
        f[7] = edge_frac / static_cast<double>(gcount);
    }

    // 8-bin grayscale histogram.
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            f[8 + g.at(x, y) / 32] += 1.0;
        }
    }
    for (int b = 0; b < 8; ++b) f[8 + b] /= n;

    return f;
}

// ---------------------------------------------------------------------------
// TinyTextEncoder
// ---------------------------------------------------------------------------

conditioning::TokenizedText TinyTextEncoder::tokenize(const std::string& caption) const {
    conditioning::TokenizedText out;
    out.ids.push_back(kBosId);
    out.offsets.push_back({0, 0});
    out.special.push_back(true);

    std::size_t i = 0;
    while (i < caption.size()) {
        const auto c = static_cast<unsigned char>(caption[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        if (std::isalnum(c)) {
            while (j < caption.size() &&
                   std::isalnum(static_cast<unsigned char>(caption[j]))) {
                ++j;
            }
        } else {
            // Punctuation and non-ASCII bytes form single-char tokens.
            ++j;
        }
        const std::string piece =
            text::to_lower_ascii(caption.substr(i, j - i));
        const int id = 3 + static_cast<int>(fnv1a64(piece) % 65521);
        out.ids.push_back(id);
        out.offsets.push_back({i, j});
        out.special.push_back(false);
        i = j;
    }

    out.ids.push_back(kEosId);
    out.offsets.push_back({caption.size(), caption.size()});
    out.special.push_back(true);
    return out;
}

conditioning::EmbeddingSequence TinyTextEncoder::encode_tokens(
    const conditioning::TokenizedText& toks) const {
    const int m = static_cast<int>(toks.ids.size());
    Eigen::MatrixXd base(m, kDim);
    for (int t = 0; t < m; ++t) {
        DetRng rng(derive_seed(0x5af3f09e, "token-embedding",
                               static_cast<std::uint64_t>(toks.ids[t])));
        for (int d = 0; d < kDim; ++d) {
            base(t, d) = rng.next_normal() / std::sqrt(static_cast<double>(kDim));
        }
        for (int d = 0; d < kDim; d += 2) {
            const double angle =
                t / std::pow(10000.0, static_cast<double>(d) / kDim);
            base(t, d) += 0.1 * std::sin(angle);
            if (d + 1 < kDim) base(t, d + 1) += 0.1 * std::cos(angle);
        }
    }
    // One neighbor-mixing pass so the encoding is contextual.
    Eigen::MatrixXd mixed = base;
    for (int t = 0; t < m; ++t) {
        if (t > 0) mixed.row(t) += 0.15 * base.row(t - 1);
        if (t + 1 < m) mixed.row(t) += 0.15 * base.row(t + 1);
    }

    conditioning::EmbeddingSequence out;
    out.token_ids = toks.ids;
    out.special = toks.special;
    out.vectors = std::move(mixed);
    return out;
}

conditioning::EmbeddingSequence TinyTextEncoder::encode(const std::string& caption) const {
    if (caption.empty()) throw Error("empty_caption");
    const auto toks = tokenize(caption);
    if (static_cast<int>(toks.ids.size()) > kContextLimit) {
        throw Error("context_overflow",
                    "limit " + std::to_string(kContextLimit));
    }
    return encode_tokens(toks);
}

conditioning::EmbeddingSequence TinyTextEncoder::encode_unconditional() const {
    conditioning::TokenizedText toks;
    toks.ids = {kBosId, kEosId};
    toks.offsets = {{0, 0}, {0, 0}};
    toks.special = {true, true};
    return encode_tokens(toks);
}

// ---------------------------------------------------------------------------
// LLM clients
// ---------------------------------------------------------------------------

ReplayLlmClient::ReplayLlmClient(const std::string& responses_path) {
    std::ifstream in(responses_path);
    if (!in) throw Error("responses_missing", responses_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        responses_[j.at("key").get<std::string>()] =
            j.at("response").get<std::string>();
    }
    id_ = "replay:" + hex64(fnv1a64(responses_path)).substr(0, 8);
}

std::string ReplayLlmClient::key_for(const std::string& user_prompt) {
    return hex64(fnv1a64(user_prompt));
}

std::string ReplayLlmClient::complete(const std::string& /*system_prompt*/,
                                      const std::string& user_prompt) {
    const auto it = responses_.find(key_for(user_prompt));
    return it == responses_.end() ? std::string{} : it->second;
}

HttpChatClient::HttpChatClient(std::string host, int port, std::string model,
                               int max_retries)
    : host_(std::move(host)), port_(port), model_(std::move(model)),
      max_retries_(max_retries) {}

std::string HttpChatClient::complete(const std::string& system_prompt,
                                     const std::string& user_prompt) {
    json payload;
    payload["model"] = model_;
    payload["temperature"] = 0;
    payload["messages"] = json::array(
        {json{{"role", "system"}, {"content", system_prompt}},
         json{{"role", "user"}, {"content", user_prompt}}});

    httplib::Headers headers;
    if (const char* key = std::getenv("SAFE_LLM_API_KEY")) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < max_retries_; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(200 * (1 << (attempt - 1))));
        }
        httplib::Client client(host_, port_);
        client.set_read_timeout(60, 0);
        const auto res = client.Post("/v1/chat/completions", headers,
                                     payload.dump(), "application/json");
        if (!res) {
            last_error = "transport failure";
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        try {
            const json body = json::parse(res->body);
            return body.at("choices").at(0).at("message").at("content")
                .get<std::string>();
        } catch (const json::exception& e) {
            last_error = std::string("malformed completion body: ") + e.what();
        }
    }
    throw Error("llm_unreachable", last_error);
}

CachingLlmClient::CachingLlmClient(std::shared_ptr<models::LlmClient> inner,
                                   std::string cache_path)
    : inner_(std::move(inner)), cache_path_(std::move(cache_path)) {
    std::ifstream in(cache_path_);
    if (in) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            cache_[j.at("key").get<std::string>()] =
                j.at("response").get<std::string>();
        }
    }
}

std::string CachingLlmClient::complete(const std::string& system_prompt,
                                       const std::string& user_prompt) {
    const std::string key = hex64(
        fnv1a64(user_prompt, fnv1a64(system_prompt, fnv1a64(inner_->id()))));
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    const std::string response = inner_->complete(system_prompt, user_prompt);
    cache_[key] = response;
    std::ofstream out(cache_path_, std::ios::app);
    if (out) {
        json j;
        j["key"] = key;
        j["response"] = response;
        out << j.dump() << "\n";
    }
    return response;
}

}  // namespace safeforge::builtin
