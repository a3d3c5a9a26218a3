// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <vector>

#include "safeforge/autodiff.hpp"

namespace safeforge::sched {

// Discrete forward-noising table with a linear beta ramp starting at
// exactly 0, so t=0 is the clean endpoint: add_noise(x, eps, 0) == x
// bit for bit. Sampling uses the deterministic eta=0 update.
class NoiseScheduler {
public:
    explicit NoiseScheduler(int num_timesteps, double beta_start = 0.0,
                            double beta_end = 0.1);

    int timesteps() const { return static_cast<int>(signal_.size()); }

    // sqrt(alpha_bar_t) and sqrt(1 - alpha_bar_t)
    double signal_coef(int t) const;
    double noise_coef(int t) const;

    Eigen::MatrixXd add_noise(const Eigen::MatrixXd& x0,
                              const Eigen::MatrixXd& noise, int t) const;

    Eigen::MatrixXd predict_clean(const Eigen::MatrixXd& x_t,
                                  const Eigen::MatrixXd& eps_hat, int t) const;

    // Graph flavor used inside the training loss.
    ad::Var predict_clean(ad::Graph& g, ad::Var x_t, ad::Var eps_hat, int t) const;

    // Deterministic step from t to t_prev (< t); t_prev < 0 returns the
    // clean estimate.
    Eigen::MatrixXd step(const Eigen::MatrixXd& x_t,
                         const Eigen::MatrixXd& eps_hat, int t,
                         int t_prev) const;

    // Descending timesteps for `steps` denoising iterations.
    std::vector<int> inference_schedule(int steps) const;

private:
    void check_t(int t) const;

    std::vector<double> signal_;  // sqrt(alpha_bar)
    std::vector<double> noise_;   // sqrt(1 - alpha_bar)
};

}  // namespace safeforge::sched
