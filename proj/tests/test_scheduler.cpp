// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstring>

#include "safeforge/error.hpp"
#include "safeforge/hash.hpp"
#include "safeforge/scheduler.hpp"

using namespace safeforge;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
    DetRng rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = rng.next_normal();
    }
    return m;
}

}  // namespace

TEST_CASE("t=0 is the clean endpoint, bit for bit") {
    const sched::NoiseScheduler s(100);
    const Eigen::MatrixXd x0 = random_matrix(6, 3, 1);
    const Eigen::MatrixXd noise = random_matrix(6, 3, 2);
    const Eigen::MatrixXd noised = s.add_noise(x0, noise, 0);
    CHECK(std::memcmp(noised.data(), x0.data(),
                      sizeof(double) * static_cast<std::size_t>(x0.size())) == 0);
    CHECK(s.signal_coef(0) == 1.0);
    CHECK(s.noise_coef(0) == 0.0);
}

TEST_CASE("mixing coefficients match the table at every t") {
    const sched::NoiseScheduler s(100);
    const Eigen::MatrixXd x0 = Eigen::MatrixXd::Constant(2, 2, 3.0);
    const Eigen::MatrixXd noise = Eigen::MatrixXd::Constant(2, 2, -2.0);
    for (const int t : {1, 40, 73, 99}) {
        const Eigen::MatrixXd noised = s.add_noise(x0, noise, t);
        const double expect = s.signal_coef(t) * 3.0 + s.noise_coef(t) * -2.0;
        CHECK(noised(0, 0) == doctest::Approx(expect).epsilon(1e-15));
        CHECK(s.signal_coef(t) * s.signal_coef(t) +
                  s.noise_coef(t) * s.noise_coef(t) ==
              doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.signal_coef(t) < s.signal_coef(t - 1));
    }
}

TEST_CASE("predict_clean inverts add_noise given the true noise") {
    const sched::NoiseScheduler s(100);
    const Eigen::MatrixXd x0 = random_matrix(4, 3, 5);
    const Eigen::MatrixXd noise = random_matrix(4, 3, 6);
    for (const int t : {10, 55, 99}) {
        const Eigen::MatrixXd xt = s.add_noise(x0, noise, t);
        const Eigen::MatrixXd back = s.predict_clean(xt, noise, t);
        CHECK((back - x0).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("graph predict_clean equals the plain version") {
    const sched::NoiseScheduler s(100);
    const Eigen::MatrixXd xt = random_matrix(4, 3, 7);
    const Eigen::MatrixXd eps = random_matrix(4, 3, 8);
    ad::Graph g(false);
    const auto out = s.predict_clean(g, g.constant(xt), g.constant(eps), 42);
    const Eigen::MatrixXd plain = s.predict_clean(xt, eps, 42);
    CHECK(std::memcmp(out.value().data(), plain.data(),
                      sizeof(double) * static_cast<std::size_t>(plain.size())) == 0);
}

TEST_CASE("inference schedule is descending, unique and hits both ends") {
    const sched::NoiseScheduler s(100);

    const auto full = s.inference_schedule(100);
    REQUIRE(full.size() == 100);
    CHECK(full.front() == 99);
    CHECK(full.back() == 0);

    const auto sparse = s.inference_schedule(10);
    CHECK(sparse.front() == 99);
    CHECK(sparse.back() == 0);
    for (std::size_t i = 1; i < sparse.size(); ++i) {
        CHECK(sparse[i] < sparse[i - 1]);
    }

    const auto capped = s.inference_schedule(500);
    CHECK(capped.size() == 100);
}

TEST_CASE("range checks") {
    const sched::NoiseScheduler s(100);
    CHECK_THROWS_WITH_AS(s.signal_coef(100),
                         doctest::Contains("timestep_out_of_range"), Error);
    CHECK_THROWS_WITH_AS(s.signal_coef(-1),
                         doctest::Contains("timestep_out_of_range"), Error);
    CHECK_THROWS_AS(sched::NoiseScheduler(0), Error);
}
