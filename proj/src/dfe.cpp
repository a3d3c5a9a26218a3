// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/dfe.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "safeforge/error.hpp"
#include "safeforge/hash.hpp"

namespace safeforge::dfe {

void TrainConfig::validate() const {
    if (learning_rate < 0.0) throw Error("invalid_learning_rate");
    if (epochs < 0) throw Error("invalid_epochs");
    if (scheduler_timesteps < 1) throw Error("invalid_scheduler_timesteps");
    if (loss_t_min < 0 || loss_t_max >= scheduler_timesteps ||
        loss_t_min > loss_t_max) {
        throw Error("invalid_loss_window");
    }
    if (adapter_rank < 1) throw Error("invalid_rank");
    if (batch_size < 1) throw Error("invalid_batch_size");
    if (scale_exp < 0 || scale_exp > 4) throw Error("scale_exponent_out_of_range");
}

ad::Var SyntheticLatentReward::score(ad::Graph& g, ad::Var predicted_clean_latent,
                                     const builtin::LatentShape& shape,
                                     const std::string& caption) const {
    const Eigen::MatrixXd target =
        builtin::caption_target_latent(caption, shape, "reward-target");
    ad::Var diff = g.sub(predicted_clean_latent, g.constant(target));
    ad::Var mse = g.mean_all(g.cmul(diff, diff));
    // reward = 1 - mse
    return g.add_scaled(g.constant(Eigen::MatrixXd::Ones(1, 1)), mse, -1.0);
}

int sample_loss_timestep(int t_min, int t_max, DetRng& rng) {
    if (t_min > t_max || t_min < 0) throw Error("invalid_loss_window");
    return static_cast<int>(rng.next_int(t_min, t_max));
}

Eigen::MatrixXd init_latent_from_ground_truth(
    const img::Image& image, const builtin::TinyAutoencoder& autoencoder,
    const sched::NoiseScheduler& scheduler, int t, std::uint64_t noise_seed) {
    const Eigen::MatrixXd clean = autoencoder.encode(image);
    DetRng rng(noise_seed);
    Eigen::MatrixXd noise(clean.rows(), clean.cols());
    for (Eigen::Index r = 0; r < noise.rows(); ++r) {
        for (Eigen::Index c = 0; c < noise.cols(); ++c) {
            noise(r, c) = rng.next_normal();
        }
    }
    return scheduler.add_noise(clean, noise, t);
}

DfeTrainer::DfeTrainer(const TinyDenoiser& backbone,
                       const builtin::TinyAutoencoder& autoencoder,
                       const DifferentiableReward& reward, TrainConfig config)
    : backbone_(backbone), autoencoder_(autoencoder), reward_(reward),
      config_(std::move(config)),
      scheduler_(config_.scheduler_timesteps) {
    config_.validate();
}

TrainState DfeTrainer::attach() const {
    TrainState state;
    state.adapters =
        attach_adapters(backbone_, config_.adapter_rank, config_.adapter_alpha,
                        config_.seed, config_.cross_attention_only);
    state.frozen_base_fingerprint = backbone_.base_fingerprint();
    return state;
}

namespace {

struct LeafSet {
    std::map<std::string, ad::Var> down;
    std::map<std::string, ad::Var> up;
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_update(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
                 Eigen::MatrixXd& m, Eigen::MatrixXd& v, std::int64_t t,
                 double lr) {
    if (m.size() == 0) m = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    if (v.size() == 0) v = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
    v = kAdamBeta2 * v.array().matrix() +
        (1.0 - kAdamBeta2) * grad.array().square().matrix();
    const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
    const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
    param.array() -= lr * (m.array() / bias1) /
                     ((v.array() / bias2).sqrt() + kAdamEps);
}

}  // namespace

void DfeTrainer::train_step(TrainState& state,
                            const std::vector<TrainSample>& batch) const {
    if (batch.empty()) throw Error("empty_batch");
    if (state.adapters.sites.empty()) throw Error("adapters_not_attached");

    ad::Graph g(/*recording=*/true);

    LeafSet leaves;
    const TinyDenoiser::WeightLookup lookup =
        [&](ad::Graph& graph, const std::string& site) -> ad::Var {
        const Eigen::MatrixXd& base = backbone_.weight(site);
        const auto it = state.adapters.sites.find(site);
        if (it == state.adapters.sites.end()) {
            return graph.constant(base);
        }
        auto dit = leaves.down.find(site);
        if (dit == leaves.down.end()) {
            leaves.down[site] = graph.leaf(it->second.down);
            leaves.up[site] = graph.leaf(it->second.up);
        }
        return graph.add_scaled(graph.constant(base),
                                graph.matmul(leaves.down[site], leaves.up[site]),
                                state.adapters.scaling());
    };

    std::vector<ad::Var> rewards;
    rewards.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const TrainSample& sample = batch[i];
        const builtin::LatentShape shape =
            autoencoder_.shape_for(sample.image.width, sample.image.height);

        DetRng t_rng(derive_seed(config_.seed, "loss-timestep",
                                 static_cast<std::uint64_t>(state.global_step), i));
        const int t = sample_loss_timestep(config_.loss_t_min, config_.loss_t_max, t_rng);

        const Eigen::MatrixXd z_t = init_latent_from_ground_truth(
            sample.image, autoencoder_, scheduler_, t,
            derive_seed(config_.seed, "train-noise",
                        static_cast<std::uint64_t>(state.global_step), i));

        ad::Var zt_var = g.constant(z_t);
        ad::Var eps_hat =
            backbone_.forward_graph(g, zt_var, t, sample.context, lookup);
        ad::Var x0_hat = scheduler_.predict_clean(g, zt_var, eps_hat, t);
        rewards.push_back(reward_.score(g, x0_hat, shape, sample.caption));
    }

    ad::Var reward_sum = rewards.front();
    for (std::size_t i = 1; i < rewards.size(); ++i) {
        reward_sum = g.add(reward_sum, rewards[i]);
    }
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    // Loss mapping: negated mean reward.
    ad::Var loss = g.scale(reward_sum, -inv_batch);

    const double loss_value = loss.value()(0, 0);
    const double mean_reward = -loss_value;

    if (!std::isfinite(loss_value)) {
        ++state.skipped_nonfinite;
        ++state.global_step;
        ++state.batch_in_epoch;
        return;
    }

    g.backward(loss);

    ++state.optimizer.step;
    for (auto& [site, pair] : state.adapters.sites) {
        adam_update(pair.down, g.grad(leaves.down[site]),
                    state.optimizer.m[site + ":down"],
                    state.optimizer.v[site + ":down"], state.optimizer.step,
                    config_.learning_rate);
        adam_update(pair.up, g.grad(leaves.up[site]),
                    state.optimizer.m[site + ":up"],
                    state.optimizer.v[site + ":up"], state.optimizer.step,
                    config_.learning_rate);
    }

    state.reward_history.emplace_back(state.global_step, mean_reward);
    ++state.global_step;
    ++state.batch_in_epoch;
}

void DfeTrainer::run_training(TrainState& state,
                              const std::vector<TrainSample>& dataset,
                              const std::string& checkpoint_path) const {
    if (dataset.empty()) throw Error("empty_dataset");
    const auto n = dataset.size();
    const auto batches_per_epoch =
        (n + static_cast<std::size_t>(config_.batch_size) - 1) /
        static_cast<std::size_t>(config_.batch_size);

    for (; state.epoch < config_.epochs; ++state.epoch) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        DetRng rng(derive_seed(config_.seed, "epoch-shuffle",
                               static_cast<std::uint64_t>(state.epoch)));
        for (std::size_t i = n; i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                rng.next_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }

        for (auto b = static_cast<std::size_t>(state.batch_in_epoch);
             b < batches_per_epoch; ++b) {
            std::vector<TrainSample> batch;
            const std::size_t begin = b * static_cast<std::size_t>(config_.batch_size);
            const std::size_t end =
                std::min(n, begin + static_cast<std::size_t>(config_.batch_size));
            for (std::size_t i = begin; i < end; ++i) {
                batch.push_back(dataset[order[i]]);
            }
            train_step(state, batch);
            if (config_.checkpoint_interval > 0 &&
                state.global_step % config_.checkpoint_interval == 0) {
                save_checkpoint(state, config_, checkpoint_path);
            }
        }
        state.batch_in_epoch = 0;
    }
    save_checkpoint(state, config_, checkpoint_path);
}

// ---------------------------------------------------------------------------
// Checkpoint IO
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'F', 'D', 'F', 'E', 'C', 'K', '1'};

void put_bytes(std::string& buf, const void* data, std::size_t size) {
    buf.append(static_cast<const char*>(data), size);
}

template <typename T>
void put_pod(std::string& buf, const T& v) {
    put_bytes(buf, &v, sizeof(T));
}

void put_string(std::string& buf, const std::string& s) {
    const auto len = static_cast<std::uint32_t>(s.size());
    put_pod(buf, len);
    put_bytes(buf, s.data(), s.size());
}

void put_matrix(std::string& buf, const Eigen::MatrixXd& m) {
    const auto rows = static_cast<std::int64_t>(m.rows());
    const auto cols = static_cast<std::int64_t>(m.cols());
    put_pod(buf, rows);
    put_pod(buf, cols);
    put_bytes(buf, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

class Reader {
public:
    Reader(const std::string& buf, std::size_t pos) : buf_(buf), pos_(pos) {}

    template <typename T>
    T pod() {
        T v;
        need(sizeof(T));
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string str() {
        const auto len = pod<std::uint32_t>();
        need(len);
        std::string s = buf_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    Eigen::MatrixXd matrix() {
        const auto rows = pod<std::int64_t>();
        const auto cols = pod<std::int64_t>();
        if (rows < 0 || cols < 0 || rows > (1 << 24) || cols > (1 << 24)) {
            throw Error("checkpoint_integrity", "bad matrix shape");
        }
        Eigen::MatrixXd m(rows, cols);
        const auto bytes = sizeof(double) * static_cast<std::size_t>(m.size());
        need(bytes);
        std::memcpy(m.data(), buf_.data() + pos_, bytes);
        pos_ += bytes;
        return m;
    }

    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) {
            throw Error("checkpoint_integrity", "truncated archive");
        }
    }
    const std::string& buf_;
    std::size_t pos_;
};

}  // namespace

void save_checkpoint(const TrainState& state, const TrainConfig& config,
                     const std::string& path) {
    std::string buf;
    put_bytes(buf, kMagic, sizeof(kMagic));
    const std::uint32_t version = 1;
    put_pod(buf, version);

    put_pod(buf, config.learning_rate);
    put_pod(buf, config.epochs);
    put_pod(buf, config.scheduler_timesteps);
    put_pod(buf, config.loss_t_min);
    put_pod(buf, config.loss_t_max);
    put_pod(buf, config.adapter_rank);
    put_pod(buf, config.adapter_alpha);
    put_pod(buf, config.batch_size);
    put_pod(buf, config.seed);
    put_pod(buf, config.scale_exp);
    put_pod(buf, config.checkpoint_interval);
    const std::uint8_t cross_only = config.cross_attention_only ? 1 : 0;
    put_pod(buf, cross_only);

    put_pod(buf, state.frozen_base_fingerprint);
    put_pod(buf, state.epoch);
    put_pod(buf, state.global_step);
    put_pod(buf, state.batch_in_epoch);
    put_pod(buf, state.skipped_nonfinite);

    put_pod(buf, state.adapters.rank);
    put_pod(buf, state.adapters.alpha);
    const auto n_sites = static_cast<std::uint32_t>(state.adapters.sites.size());
    put_pod(buf, n_sites);
    for (const auto& [name, pair] : state.adapters.sites) {
        put_string(buf, name);
        put_matrix(buf, pair.down);
        put_matrix(buf, pair.up);
    }

    put_pod(buf, state.optimizer.step);
    const auto n_moments = static_cast<std::uint32_t>(state.optimizer.m.size());
    put_pod(buf, n_moments);
    for (const auto& [key, m] : state.optimizer.m) {
        put_string(buf, key);
        put_matrix(buf, m);
        put_matrix(buf, state.optimizer.v.at(key));
    }

    const auto n_hist = static_cast<std::uint64_t>(state.reward_history.size());
    put_pod(buf, n_hist);
    for (const auto& [step, reward] : state.reward_history) {
        put_pod(buf, step);
        put_pod(buf, reward);
    }

    const std::uint64_t checksum = fnv1a64(buf.data(), buf.size());
    put_pod(buf, checksum);

    // Atomic write: temp file in the same directory, then rename.
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("checkpoint_write_failed", tmp);
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out) throw Error("checkpoint_write_failed", tmp);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("checkpoint_open_failed", path);
    std::string buf((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    if (buf.size() < sizeof(kMagic) + sizeof(std::uint64_t)) {
        throw Error("checkpoint_integrity", "archive too small");
    }
    if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
        throw Error("checkpoint_integrity", "bad magic");
    }
    const std::size_t payload_size = buf.size() - sizeof(std::uint64_t);
    std::uint64_t stored_checksum;
    std::memcpy(&stored_checksum, buf.data() + payload_size, sizeof(stored_checksum));
    if (fnv1a64(buf.data(), payload_size) != stored_checksum) {
        throw Error("checkpoint_integrity", "checksum mismatch");
    }

    Reader r(buf, sizeof(kMagic));
    const auto version = r.pod<std::uint32_t>();
    if (version != 1) throw Error("checkpoint_integrity", "unsupported version");

    Checkpoint ck;
    ck.config.learning_rate = r.pod<double>();
    ck.config.epochs = r.pod<int>();
    ck.config.scheduler_timesteps = r.pod<int>();
    ck.config.loss_t_min = r.pod<int>();
    ck.config.loss_t_max = r.pod<int>();
    ck.config.adapter_rank = r.pod<int>();
    ck.config.adapter_alpha = r.pod<double>();
    ck.config.batch_size = r.pod<int>();
    ck.config.seed = r.pod<std::uint64_t>();
    ck.config.scale_exp = r.pod<int>();
    ck.config.checkpoint_interval = r.pod<int>();
    ck.config.cross_attention_only = r.pod<std::uint8_t>() != 0;

    ck.state.frozen_base_fingerprint = r.pod<std::uint64_t>();
    ck.state.epoch = r.pod<std::int64_t>();
    ck.state.global_step = r.pod<std::int64_t>();
    ck.state.batch_in_epoch = r.pod<std::int64_t>();
    ck.state.skipped_nonfinite = r.pod<std::int64_t>();

    ck.state.adapters.rank = r.pod<int>();
    ck.state.adapters.alpha = r.pod<double>();
    const auto n_sites = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_sites; ++i) {
        const std::string name = r.str();
        AdapterPair pair;
        pair.down = r.matrix();
        pair.up = r.matrix();
        ck.state.adapters.sites[name] = std::move(pair);
    }

    ck.state.optimizer.step = r.pod<std::int64_t>();
    const auto n_moments = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_moments; ++i) {
        const std::string key = r.str();
        ck.state.optimizer.m[key] = r.matrix();
        ck.state.optimizer.v[key] = r.matrix();
    }

    const auto n_hist = r.pod<std::uint64_t>();
    for (std::uint64_t i = 0; i < n_hist; ++i) {
        const auto step = r.pod<std::int64_t>();
        const auto reward = r.pod<double>();
        ck.state.reward_history.emplace_back(step, reward);
    }

    return ck;
}

std::uint64_t file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("file_open_failed", path);
    std::string buf((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    return fnv1a64(buf.data(), buf.size());
}

}  // namespace safeforge::dfe
