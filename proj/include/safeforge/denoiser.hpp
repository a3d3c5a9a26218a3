// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "safeforge/autodiff.hpp"

namespace safeforge::dfe {

// Low-rank pair added to one frozen weight site. For a base weight applied
// as X * W (in x out), `down` (in x r) carries the small random init and
// `up` (r x out) starts at zero, so the product vanishes at attach time and
// the adapted forward pass equals the frozen one exactly.
struct AdapterPair {
    Eigen::MatrixXd down;
    Eigen::MatrixXd up;
};

struct AdapterSet {
    int rank = 0;
    double alpha = 0.0;
    std::map<std::string, AdapterPair> sites;

    double scaling() const { return alpha / static_cast<double>(rank); }
    Eigen::MatrixXd effective(const std::string& site,
                              const Eigen::MatrixXd& base) const;
    std::size_t trainable_parameter_count() const;
};

// Small transformer-style denoiser: latent tokens -> input projection ->
// timestep conditioning -> one self-attention block -> one cross-attention
// block over the text context -> feed-forward -> noise prediction. Weights
// are fixed at construction ("pre-trained"); adapters provide the only
// trainable parameters.
class TinyDenoiser {
public:
    TinyDenoiser(int latent_channels, int model_dim, int context_dim,
                 std::uint64_t weight_seed);

    // site name -> Var; lets callers splice adapter math into the graph.
    using WeightLookup = std::function<ad::Var(ad::Graph&, const std::string&)>;

    // Predicted noise for latent tokens z (tokens x channels) at timestep t
    // under text context ctx (m x context_dim).
    Eigen::MatrixXd forward(const Eigen::MatrixXd& z, int t,
                            const Eigen::MatrixXd& ctx,
                            const AdapterSet* adapters = nullptr) const;

    ad::Var forward_graph(ad::Graph& g, ad::Var z, int t,
                          const Eigen::MatrixXd& ctx,
                          const WeightLookup& weights) const;

    const Eigen::MatrixXd& weight(const std::string& site) const;
    const std::vector<std::string>& attention_sites() const { return attention_sites_; }
    const std::vector<std::string>& cross_attention_sites() const {
        return cross_attention_sites_;
    }
    const std::vector<std::string>& all_sites() const { return site_order_; }

    int latent_channels() const { return latent_channels_; }
    int model_dim() const { return model_dim_; }
    int context_dim() const { return context_dim_; }

    // FNV over all base weight bytes in site order; invariant under
    // training since only adapters learn.
    std::uint64_t base_fingerprint() const;

private:
    int latent_channels_;
    int model_dim_;
    int context_dim_;
    std::map<std::string, Eigen::MatrixXd> weights_;
    std::vector<std::string> site_order_;
    std::vector<std::string> attention_sites_;
    std::vector<std::string> cross_attention_sites_;
};

// Creates zero-initialized adapters on the attention projection sites
// (query/key/value/output of both blocks; optionally cross-attention only).
// Throws Error("rank_too_large") when rank >= min(site dims).
AdapterSet attach_adapters(const TinyDenoiser& backbone, int rank, double alpha,
                           std::uint64_t seed, bool cross_attention_only = false);

}  // namespace safeforge::dfe
