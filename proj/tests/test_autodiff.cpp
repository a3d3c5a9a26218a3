// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <functional>

#include "safeforge/autodiff.hpp"
#include "safeforge/error.hpp"
#include "safeforge/hash.hpp"

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

// Central-difference gradient of `loss` with respect to `param`.
Eigen::MatrixXd finite_difference(
    const std::function<double(const Eigen::MatrixXd&)>& loss,
    Eigen::MatrixXd param, double eps = 1e-6) {
    Eigen::MatrixXd grad(param.rows(), param.cols());
    for (int r = 0; r < param.rows(); ++r) {
        for (int c = 0; c < param.cols(); ++c) {
            const double saved = param(r, c);
            param(r, c) = saved + eps;
            const double up = loss(param);
            param(r, c) = saved - eps;
            const double down = loss(param);
            param(r, c) = saved;
            grad(r, c) = (up - down) / (2.0 * eps);
        }
    }
    return grad;
}

void check_close(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                 double tol = 1e-6) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    const double denom = std::max(1.0, b.cwiseAbs().maxCoeff());
    CHECK((a - b).cwiseAbs().maxCoeff() / denom <= tol);
}

}  // namespace

TEST_CASE("gradients match finite differences per op") {
    const Eigen::MatrixXd A0 = random_matrix(3, 4, 1);
    const Eigen::MatrixXd B0 = random_matrix(4, 2, 2);
    const Eigen::MatrixXd C0 = random_matrix(3, 2, 3);

    SUBCASE("matmul") {
        auto loss = [&](const Eigen::MatrixXd& a) {
            ad::Graph g;
            return g.value(g.mean_all(g.matmul(g.leaf(a), g.constant(B0))))(0, 0);
        };
        ad::Graph g;
        const auto a = g.leaf(A0);
        g.backward(g.mean_all(g.matmul(a, g.constant(B0))));
        check_close(g.grad(a), finite_difference(loss, A0));
    }

    SUBCASE("matmul_nt") {
        const Eigen::MatrixXd K = random_matrix(5, 4, 7);
        auto loss = [&](const Eigen::MatrixXd& a) {
            ad::Graph g;
            return g.value(g.mean_all(g.matmul_nt(g.leaf(a), g.constant(K))))(0, 0);
        };
        ad::Graph g;
        const auto a = g.leaf(A0);
        g.backward(g.mean_all(g.matmul_nt(a, g.constant(K))));
        check_close(g.grad(a), finite_difference(loss, A0));
    }

    SUBCASE("cmul and sub") {
        auto loss = [&](const Eigen::MatrixXd& c) {
            ad::Graph g;
            const auto v = g.leaf(c);
            return g.value(g.mean_all(g.cmul(g.sub(v, g.constant(C0)), v)))(0, 0);
        };
        ad::Graph g;
        const auto c = g.leaf(C0);
        g.backward(g.mean_all(g.cmul(g.sub(c, g.constant(C0)), c)));
        check_close(g.grad(c), finite_difference(loss, C0));
    }

    SUBCASE("tanh") {
        auto loss = [&](const Eigen::MatrixXd& a) {
            ad::Graph g;
            return g.value(g.mean_all(g.tanh_(g.leaf(a))))(0, 0);
        };
        ad::Graph g;
        const auto a = g.leaf(A0);
        g.backward(g.mean_all(g.tanh_(a)));
        check_close(g.grad(a), finite_difference(loss, A0));
    }

    SUBCASE("softmax_rows") {
        const Eigen::MatrixXd W = random_matrix(4, 4, 9);
        auto loss = [&](const Eigen::MatrixXd& a) {
            ad::Graph g;
            return g.value(g.mean_all(
                g.cmul(g.softmax_rows(g.leaf(a)), g.constant(A0))))(0, 0);
        };
        ad::Graph g;
        const auto a = g.leaf(A0);
        g.backward(g.mean_all(g.cmul(g.softmax_rows(a), g.constant(A0))));
        check_close(g.grad(a), finite_difference(loss, A0));
        (void)W;
    }

    SUBCASE("add_rowvec") {
        const Eigen::MatrixXd row = random_matrix(1, 4, 11);
        auto loss = [&](const Eigen::MatrixXd& r) {
            ad::Graph g;
            return g.value(g.mean_all(
                g.tanh_(g.add_rowvec(g.constant(A0), g.leaf(r)))))(0, 0);
        };
        ad::Graph g;
        const auto r = g.leaf(row);
        g.backward(g.mean_all(g.tanh_(g.add_rowvec(g.constant(A0), r))));
        check_close(g.grad(r), finite_difference(loss, row));
    }

    SUBCASE("scale and add_scaled") {
        auto loss = [&](const Eigen::MatrixXd& a) {
            ad::Graph g;
            const auto v = g.leaf(a);
            return g.value(g.mean_all(
                g.add_scaled(g.scale(v, 2.5), g.cmul(v, v), -0.75)))(0, 0);
        };
        ad::Graph g;
        const auto a = g.leaf(A0);
        g.backward(g.mean_all(
            g.add_scaled(g.scale(a, 2.5), g.cmul(a, a), -0.75)));
        check_close(g.grad(a), finite_difference(loss, A0));
    }
}

TEST_CASE("composite attention-style graph gradcheck") {
    const Eigen::MatrixXd X = random_matrix(4, 3, 21);
    const Eigen::MatrixXd Wq0 = random_matrix(3, 3, 22);
    const Eigen::MatrixXd Wk0 = random_matrix(3, 3, 23);
    const Eigen::MatrixXd Wv0 = random_matrix(3, 3, 24);

    auto forward = [&](ad::Graph& g, ad::Var wq) {
        const auto x = g.constant(X);
        const auto q = g.matmul(x, wq);
        const auto k = g.matmul(x, g.constant(Wk0));
        const auto v = g.matmul(x, g.constant(Wv0));
        const auto attn = g.softmax_rows(g.scale(g.matmul_nt(q, k), 1.0 / std::sqrt(3.0)));
        const auto out = g.add(x, g.matmul(attn, v));
        return g.mean_all(g.cmul(out, out));
    };

    auto loss = [&](const Eigen::MatrixXd& wq) {
        ad::Graph g;
        return g.value(forward(g, g.leaf(wq)))(0, 0);
    };

    ad::Graph g;
    const auto wq = g.leaf(Wq0);
    g.backward(forward(g, wq));
    check_close(g.grad(wq), finite_difference(loss, Wq0), 1e-5);
}

TEST_CASE("non-recording graphs compute identical values") {
    const Eigen::MatrixXd X = random_matrix(5, 5, 31);
    auto run = [&](bool recording) {
        ad::Graph g(recording);
        const auto x = recording ? g.leaf(X) : g.constant(X);
        return g.value(g.mean_all(g.softmax_rows(g.tanh_(g.matmul(x, x)))))(0, 0);
    };
    CHECK(run(true) == run(false));
}

TEST_CASE("backward demands a scalar output") {
    ad::Graph g;
    const auto a = g.leaf(random_matrix(2, 2, 41));
    CHECK_THROWS_AS(g.backward(g.tanh_(a)), Error);
}
