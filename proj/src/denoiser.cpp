// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/denoiser.hpp"

#include <cmath>

#include "safeforge/error.hpp"
#include "safeforge/hash.hpp"

namespace safeforge::dfe {

Eigen::MatrixXd AdapterSet::effective(const std::string& site,
                                      const Eigen::MatrixXd& base) const {
    const auto it = sites.find(site);
    if (it == sites.end()) return base;
    return base + scaling() * (it->second.down * it->second.up);
}

std::size_t AdapterSet::trainable_parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, pair] : sites) {
        n += static_cast<std::size_t>(pair.down.size()) +
             static_cast<std::size_t>(pair.up.size());
    }
    return n;
}

namespace {

Eigen::MatrixXd random_weight(int rows, int cols, std::uint64_t seed) {
    DetRng rng(seed);
    Eigen::MatrixXd w(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            w(r, c) = rng.next_normal() * scale;
        }
    }
    return w;
}

Eigen::MatrixXd time_features(int t, int dim) {
    Eigen::MatrixXd f(1, dim);
    for (int d = 0; d < dim; d += 2) {
        const double angle =
            static_cast<double>(t) /
            std::pow(10000.0, static_cast<double>(d) / dim);
        f(0, d) = std::sin(angle);
        if (d + 1 < dim) f(0, d + 1) = std::cos(angle);
    }
    return f;
}

}  // namespace

TinyDenoiser::TinyDenoiser(int latent_channels, int model_dim, int context_dim,
                           std::uint64_t weight_seed)
    : latent_channels_(latent_channels), model_dim_(model_dim),
      context_dim_(context_dim) {
    const int d = model_dim;
    struct SiteSpec {
        const char* name;
        int rows;
        int cols;
        bool attention;
        bool cross;
    };
    const SiteSpec specs[] = {
        {"in_proj", latent_channels, d, false, false},
        {"time_mlp1", d, d, false, false},
        {"time_mlp2", d, d, false, false},
        {"self_q", d, d, true, false},
        {"self_k", d, d, true, false},
        {"self_v", d, d, true, false},
        {"self_o", d, d, true, false},
        {"cross_q", d, d, true, true},
        {"cross_k", context_dim, d, true, true},
        {"cross_v", context_dim, d, true, true},
        {"cross_o", d, d, true, true},
        {"ffn1", d, 2 * d, false, false},
        {"ffn2", 2 * d, d, false, false},
        {"out_proj", d, latent_channels, false, false},
    };
    std::uint64_t idx = 0;
    for (const auto& s : specs) {
        weights_[s.name] = random_weight(
            s.rows, s.cols, derive_seed(weight_seed, "denoiser-weight", idx++));
        site_order_.emplace_back(s.name);
        if (s.attention) attention_sites_.emplace_back(s.name);
        if (s.cross) cross_attention_sites_.emplace_back(s.name);
    }
}

const Eigen::MatrixXd& TinyDenoiser::weight(const std::string& site) const {
    const auto it = weights_.find(site);
    if (it == weights_.end()) throw Error("unknown_weight_site", site);
    return it->second;
}

ad::Var TinyDenoiser::forward_graph(ad::Graph& g, ad::Var z, int t,
                                    const Eigen::MatrixXd& ctx,
                                    const WeightLookup& weights) const {
    if (z.value().cols() != latent_channels_) {
        throw Error("shape_mismatch", "latent channels");
    }
    if (ctx.cols() != context_dim_) {
        throw Error("shape_mismatch", "context dim");
    }
    auto W = [&](const char* site) { return weights(g, site); };
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(model_dim_));

    ad::Var x = g.matmul(z, W("in_proj"));

    ad::Var tf = g.constant(time_features(t, model_dim_));
    ad::Var temb = g.matmul(g.tanh_(g.matmul(tf, W("time_mlp1"))), W("time_mlp2"));
    x = g.add_rowvec(x, temb);

    // Self-attention over latent tokens.
    {
        ad::Var q = g.matmul(x, W("self_q"));
        ad::Var k = g.matmul(x, W("self_k"));
        ad::Var v = g.matmul(x, W("self_v"));
        ad::Var attn = g.softmax_rows(g.scale(g.matmul_nt(q, k), inv_sqrt_d));
        x = g.add(x, g.matmul(g.matmul(attn, v), W("self_o")));
    }

    // Cross-attention over the text context.
    {
        ad::Var ctx_var = g.constant(ctx);
        ad::Var q = g.matmul(x, W("cross_q"));
        ad::Var k = g.matmul(ctx_var, W("cross_k"));
        ad::Var v = g.matmul(ctx_var, W("cross_v"));
        ad::Var attn = g.softmax_rows(g.scale(g.matmul_nt(q, k), inv_sqrt_d));
        x = g.add(x, g.matmul(g.matmul(attn, v), W("cross_o")));
    }

    x = g.add(x, g.matmul(g.tanh_(g.matmul(x, W("ffn1"))), W("ffn2")));

    return g.matmul(x, W("out_proj"));
}

Eigen::MatrixXd TinyDenoiser::forward(const Eigen::MatrixXd& z, int t,
                                      const Eigen::MatrixXd& ctx,
                                      const AdapterSet* adapters) const {
    ad::Graph g(/*recording=*/false);
    const WeightLookup lookup = [&](ad::Graph& graph, const std::string& site) {
        const Eigen::MatrixXd& base = weight(site);
        if (adapters != nullptr) {
            return graph.constant(adapters->effective(site, base));
        }
        return graph.constant(base);
    };
    return forward_graph(g, g.constant(z), t, ctx, lookup).value();
}

std::uint64_t TinyDenoiser::base_fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& name : site_order_) {
        const auto& w = weights_.at(name);
        h = fnv1a64(name, h);
        h = fnv1a64(w.data(), sizeof(double) * static_cast<std::size_t>(w.size()), h);
    }
    return h;
}

AdapterSet attach_adapters(const TinyDenoiser& backbone, int rank, double alpha,
                           std::uint64_t seed, bool cross_attention_only) {
    if (rank < 1) throw Error("invalid_rank");
    AdapterSet set;
    set.rank = rank;
    set.alpha = alpha;
    const auto& sites = cross_attention_only ? backbone.cross_attention_sites()
                                             : backbone.attention_sites();
    std::uint64_t idx = 0;
    for (const auto& name : sites) {
        const auto& w = backbone.weight(name);
        const auto in = static_cast<int>(w.rows());
        const auto out = static_cast<int>(w.cols());
        if (rank >= std::min(in, out)) {
            throw Error("rank_too_large",
                        name + ": rank " + std::to_string(rank) +
                            " >= min(" + std::to_string(in) + ", " +
                            std::to_string(out) + ")");
        }
        AdapterPair pair;
        DetRng rng(derive_seed(seed, "adapter-down", idx++));
        pair.down.resize(in, rank);
        const double scale = 0.01 / std::sqrt(static_cast<double>(in));
        for (int r = 0; r < in; ++r) {
            for (int c = 0; c < rank; ++c) {
                pair.down(r, c) = rng.next_normal() * scale;
            }
        }
        pair.up = Eigen::MatrixXd::Zero(rank, out);
        set.sites[name] = std::move(pair);
    }
    return set;
}

}  // namespace safeforge::dfe
