// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/scheduler.hpp"

#include <cmath>

#include "safeforge/error.hpp"

namespace safeforge::sched {

NoiseScheduler::NoiseScheduler(int num_timesteps, double beta_start,
                               double beta_end) {
    if (num_timesteps < 1) throw Error("invalid_scheduler_timesteps");
    if (beta_start < 0.0 || beta_end >= 1.0 || beta_end < beta_start) {
        throw Error("invalid_beta_schedule");
    }
    signal_.resize(static_cast<std::size_t>(num_timesteps));
    noise_.resize(static_cast<std::size_t>(num_timesteps));
    double alpha_bar = 1.0;
    for (int t = 0; t < num_timesteps; ++t) {
        const double beta =
            num_timesteps == 1
                ? beta_start
                : beta_start + (beta_end - beta_start) * t / (num_timesteps - 1);
        alpha_bar *= 1.0 - beta;
        signal_[static_cast<std::size_t>(t)] = std::sqrt(alpha_bar);
        noise_[static_cast<std::size_t>(t)] = std::sqrt(1.0 - alpha_bar);
    }
}

void NoiseScheduler::check_t(int t) const {
    if (t < 0 || t >= timesteps()) {
        throw Error("timestep_out_of_range", std::to_string(t));
    }
}

double NoiseScheduler::signal_coef(int t) const {
    check_t(t);
    return signal_[static_cast<std::size_t>(t)];
}

double NoiseScheduler::noise_coef(int t) const {
    check_t(t);
    return noise_[static_cast<std::size_t>(t)];
}

Eigen::MatrixXd NoiseScheduler::add_noise(const Eigen::MatrixXd& x0,
                                          const Eigen::MatrixXd& noise,
                                          int t) const {
    check_t(t);
    if (t == 0 && signal_[0] == 1.0) {
        return x0;  // clean endpoint, bit-exact
    }
    return signal_coef(t) * x0 + noise_coef(t) * noise;
}

Eigen::MatrixXd NoiseScheduler::predict_clean(const Eigen::MatrixXd& x_t,
                                              const Eigen::MatrixXd& eps_hat,
                                              int t) const {
    check_t(t);
    // Multiply by the reciprocal so the value matches the graph flavor bit
    // for bit.
    return (x_t - noise_coef(t) * eps_hat) * (1.0 / signal_coef(t));
}

ad::Var NoiseScheduler::predict_clean(ad::Graph& g, ad::Var x_t,
                                      ad::Var eps_hat, int t) const {
    check_t(t);
    const double nc = noise_coef(t);
    const double sc = signal_coef(t);
    return g.scale(g.add_scaled(x_t, eps_hat, -nc), 1.0 / sc);
}

Eigen::MatrixXd NoiseScheduler::step(const Eigen::MatrixXd& x_t,
                                     const Eigen::MatrixXd& eps_hat, int t,
                                     int t_prev) const {
    const Eigen::MatrixXd x0 = predict_clean(x_t, eps_hat, t);
    if (t_prev < 0) return x0;
    check_t(t_prev);
    return signal_coef(t_prev) * x0 + noise_coef(t_prev) * eps_hat;
}

std::vector<int> NoiseScheduler::inference_schedule(int steps) const {
    if (steps < 1) throw Error("invalid_inference_steps");
    const int T = timesteps();
    std::vector<int> out;
    if (steps >= T) {
        for (int t = T - 1; t >= 0; --t) out.push_back(t);
        return out;
    }
    int prev = -1;
    for (int i = 0; i < steps; ++i) {
        const int t = static_cast<int>(std::lround(
            static_cast<double>(T - 1) *
            (steps == 1 ? 1.0
                        : static_cast<double>(steps - 1 - i) / (steps - 1))));
        if (t != prev) {
            out.push_back(t);
            prev = t;
        }
    }
    return out;
}

}  // namespace safeforge::sched
