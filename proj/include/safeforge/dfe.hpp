// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safeforge/builtin_models.hpp"
#include "safeforge/conditioning.hpp"
#include "safeforge/denoiser.hpp"
#include "safeforge/hash.hpp"
#include "safeforge/image.hpp"
#include "safeforge/scheduler.hpp"

namespace safeforge::dfe {

struct TrainConfig {
    double learning_rate = 5e-5;
    int epochs = 300;
    int scheduler_timesteps = 100;
    int loss_t_min = 40;
    int loss_t_max = 99;  // inclusive
    int adapter_rank = 8;
    double adapter_alpha = 8.0;
    int batch_size = 4;
    std::uint64_t seed = 42;
    int scale_exp = 2;
    int checkpoint_interval = 500;  // steps
    bool cross_attention_only = false;

    void validate() const;
};

// Adam moments per adapter matrix, keyed "<site>:down" / "<site>:up".
struct AdamState {
    std::map<std::string, Eigen::MatrixXd> m;
    std::map<std::string, Eigen::MatrixXd> v;
    std::int64_t step = 0;
};

struct TrainState {
    AdapterSet adapters;
    std::uint64_t frozen_base_fingerprint = 0;
    AdamState optimizer;
    std::int64_t epoch = 0;
    std::int64_t global_step = 0;
    std::int64_t batch_in_epoch = 0;
    std::int64_t skipped_nonfinite = 0;
    std::vector<std::pair<std::int64_t, double>> reward_history;
};

struct TrainSample {
    img::Image image;  // curated ground truth
    std::string caption;
    Eigen::MatrixXd context;  // conditioned text embedding (m x dim)
};

// Differentiable reward over the predicted clean latent. The default
// synthetic reward drives the latent toward a caption-derived target; the
// loss mapping is the negated mean reward.
class DifferentiableReward {
public:
    virtual ~DifferentiableReward() = default;
    virtual ad::Var score(ad::Graph& g, ad::Var predicted_clean_latent,
                          const builtin::LatentShape& shape,
                          const std::string& caption) const = 0;
    virtual std::string id() const = 0;
};

class SyntheticLatentReward final : public DifferentiableReward {
public:
    ad::Var score(ad::Graph& g, ad::Var predicted_clean_latent,
                  const builtin::LatentShape& shape,
                  const std::string& caption) const override;
    std::string id() const override { return "synthetic-latent-reward"; }
};

// Uniform integer timestep draw over the inclusive loss window.
int sample_loss_timestep(int t_min, int t_max, DetRng& rng);

// Encodes the ground-truth image and applies forward noising at t with
// noise drawn from noise_seed. Deterministic in (image, t, seed).
Eigen::MatrixXd init_latent_from_ground_truth(const img::Image& image,
                                              const builtin::TinyAutoencoder& autoencoder,
                                              const sched::NoiseScheduler& scheduler,
                                              int t, std::uint64_t noise_seed);

class DfeTrainer {
public:
    DfeTrainer(const TinyDenoiser& backbone, const builtin::TinyAutoencoder& autoencoder,
               const DifferentiableReward& reward, TrainConfig config);

    TrainState attach() const;

    // One optimization step over the batch. Non-finite losses skip the
    // update and bump the skip counter; the step counter always advances so
    // resumed runs stay aligned.
    void train_step(TrainState& state, const std::vector<TrainSample>& batch) const;

    // Epoch loop with periodic checkpoints. Resumes exactly from `state`
    // (epoch / batch_in_epoch position included).
    void run_training(TrainState& state, const std::vector<TrainSample>& dataset,
                      const std::string& checkpoint_path) const;

    const TrainConfig& config() const { return config_; }
    const sched::NoiseScheduler& scheduler() const { return scheduler_; }

private:
    const TinyDenoiser& backbone_;
    const builtin::TinyAutoencoder& autoencoder_;
    const DifferentiableReward& reward_;
    TrainConfig config_;
    sched::NoiseScheduler scheduler_;
};

// Checkpoint archive: config + counters + adapters + optimizer + reward
// history + base fingerprint, FNV checksummed, written atomically.
void save_checkpoint(const TrainState& state, const TrainConfig& config,
                     const std::string& path);

struct Checkpoint {
    TrainState state;
    TrainConfig config;
};

// Throws Error("checkpoint_integrity") on magic/checksum mismatch.
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t file_fingerprint(const std::string& path);

}  // namespace safeforge::dfe
