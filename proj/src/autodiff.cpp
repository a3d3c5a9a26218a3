// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/autodiff.hpp"

#include <cmath>

#include "safeforge/error.hpp"

namespace safeforge::ad {

const Eigen::MatrixXd& Var::value() const { return graph->value(*this); }

Var Graph::push(Eigen::MatrixXd value, bool requires_grad,
                std::function<void(Graph&, const Node&)> back) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = recording_ && requires_grad;
    if (n.requires_grad) {
        n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
        n.back = std::move(back);
    }
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Graph::accumulate(int index, const Eigen::MatrixXd& delta) {
    Node& n = nodes_[static_cast<std::size_t>(index)];
    if (n.requires_grad) n.grad += delta;
}

Var Graph::constant(Eigen::MatrixXd value) {
    return push(std::move(value), false, nullptr);
}

Var Graph::leaf(const Eigen::MatrixXd& value) {
    return push(value, true, nullptr);
}

Var Graph::matmul(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.cols() != B.rows()) throw Error("shape_mismatch", "matmul");
    Eigen::MatrixXd out = A * B;
    const int ai = a.index;
    const int bi = b.index;
    const bool rg = nodes_[ai].requires_grad || nodes_[bi].requires_grad;
    return push(std::move(out), rg, [ai, bi](Graph& g, const Node& self) {
        g.accumulate(ai, self.grad * g.nodes_[bi].value.transpose());
        g.accumulate(bi, g.nodes_[ai].value.transpose() * self.grad);
    });
}

Var Graph::matmul_nt(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.cols() != B.cols()) throw Error("shape_mismatch", "matmul_nt");
    Eigen::MatrixXd out = A * B.transpose();
    const int ai = a.index;
    const int bi = b.index;
    const bool rg = nodes_[ai].requires_grad || nodes_[bi].requires_grad;
    return push(std::move(out), rg, [ai, bi](Graph& g, const Node& self) {
        g.accumulate(ai, self.grad * g.nodes_[bi].value);
        g.accumulate(bi, self.grad.transpose() * g.nodes_[ai].value);
    });
}

Var Graph::add(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.rows() != B.rows() || A.cols() != B.cols()) {
        throw Error("shape_mismatch", "add");
    }
    const int ai = a.index;
    const int bi = b.index;
    const bool rg = nodes_[ai].requires_grad || nodes_[bi].requires_grad;
    return push(A + B, rg, [ai, bi](Graph& g, const Node& self) {
        g.accumulate(ai, self.grad);
        g.accumulate(bi, self.grad);
    });
}

Var Graph::sub(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.rows() != B.rows() || A.cols() != B.cols()) {
        throw Error("shape_mismatch", "sub");
    }
    const int ai = a.index;
    const int bi = b.index;
    const bool rg = nodes_[ai].requires_grad || nodes_[bi].requires_grad;
    return push(A - B, rg, [ai, bi](Graph& g, const Node& self) {
        g.accumulate(ai, self.grad);
        g.accumulate(bi, -self.grad);
    });
}

Var Graph::cmul(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.rows() != B.rows() || A.cols() != B.cols()) {
        throw Error("shape_mismatch", "cmul");
    }
    const int ai = a.index;
    const int bi = b.index;
    const bool rg = nodes_[ai].requires_grad || nodes_[bi].requires_grad;
    return push(A.cwiseProduct(B), rg, [ai, bi](Graph& g, const Node& self) {
        g.accumulate(ai, self.grad.cwiseProduct(g.nodes_[bi].value));
        g.accumulate(bi, self.grad.cwiseProduct(g.nodes_[ai].value));
    });
}

Var Graph::add_rowvec(Var a, Var row) {
    const auto& A = value(a);
    const auto& R = value(row);
    if (R.rows() != 1 || R.cols() != A.cols()) {
        throw Error("shape_mismatch", "add_rowvec");
    }
    Eigen::MatrixXd out = A.rowwise() + R.row(0);
    const int ai = a.index;
    const int ri = row.index;
    const bool rg = nodes_[ai].requires_grad || nodes_[ri].requires_grad;
    return push(std::move(out), rg, [ai, ri](Graph& g, const Node& self) {
        g.accumulate(ai, self.grad);
        g.accumulate(ri, self.grad.colwise().sum());
    });
}

Var Graph::scale(Var a, double s) {
    const int ai = a.index;
    const bool rg = nodes_[ai].requires_grad;
    return push(value(a) * s, rg, [ai, s](Graph& g, const Node& self) {
        g.accumulate(ai, self.grad * s);
    });
}

Var Graph::add_scaled(Var a, Var b, double s) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.rows() != B.rows() || A.cols() != B.cols()) {
        throw Error("shape_mismatch", "add_scaled");
    }
    const int ai = a.index;
    const int bi = b.index;
    const bool rg = nodes_[ai].requires_grad || nodes_[bi].requires_grad;
    return push(A + s * B, rg, [ai, bi, s](Graph& g, const Node& self) {
        g.accumulate(ai, self.grad);
        g.accumulate(bi, self.grad * s);
    });
}

Var Graph::tanh_(Var a) {
    const int ai = a.index;
    Eigen::MatrixXd out = value(a).array().tanh().matrix();
    const bool rg = nodes_[ai].requires_grad;
    return push(std::move(out), rg, [ai](Graph& g, const Node& self) {
        g.accumulate(ai, (self.grad.array() *
                          (1.0 - self.value.array().square()))
                             .matrix());
    });
}

Var Graph::softmax_rows(Var a) {
    const auto& A = value(a);
    Eigen::MatrixXd out(A.rows(), A.cols());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        const double m = A.row(r).maxCoeff();
        Eigen::ArrayXd e = (A.row(r).array() - m).exp();
        out.row(r) = (e / e.sum()).matrix();
    }
    const int ai = a.index;
    const bool rg = nodes_[ai].requires_grad;
    return push(std::move(out), rg, [ai](Graph& g, const Node& self) {
        const auto& y = self.value;
        Eigen::MatrixXd dx(y.rows(), y.cols());
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            const double dot = self.grad.row(r).dot(y.row(r));
            dx.row(r) =
                (y.row(r).array() * (self.grad.row(r).array() - dot)).matrix();
        }
        g.accumulate(ai, dx);
    });
}

Var Graph::mean_all(Var a) {
    const auto& A = value(a);
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = A.mean();
    const int ai = a.index;
    const double inv = 1.0 / static_cast<double>(A.size());
    const Eigen::Index rows = A.rows();
    const Eigen::Index cols = A.cols();
    const bool rg = nodes_[ai].requires_grad;
    return push(std::move(out), rg,
                [ai, inv, rows, cols](Graph& g, const Node& self) {
                    g.accumulate(ai, Eigen::MatrixXd::Constant(
                                         rows, cols, self.grad(0, 0) * inv));
                });
}

Var Graph::sum_all(Var a) {
    const auto& A = value(a);
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = A.sum();
    const int ai = a.index;
    const Eigen::Index rows = A.rows();
    const Eigen::Index cols = A.cols();
    const bool rg = nodes_[ai].requires_grad;
    return push(std::move(out), rg,
                [ai, rows, cols](Graph& g, const Node& self) {
                    g.accumulate(ai, Eigen::MatrixXd::Constant(rows, cols,
                                                               self.grad(0, 0)));
                });
}

void Graph::backward(Var scalar_output) {
    if (!recording_) throw Error("autodiff_not_recording");
    Node& out = nodes_[static_cast<std::size_t>(scalar_output.index)];
    if (out.value.size() != 1) {
        throw Error("autodiff_nonscalar_output");
    }
    if (!out.requires_grad) {
        // No trainable inputs feed the output; nothing to do.
        return;
    }
    out.grad = Eigen::MatrixXd::Ones(1, 1);
    for (int i = scalar_output.index; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.requires_grad && n.back) {
            n.back(*this, n);
        }
    }
}

const Eigen::MatrixXd& Graph::grad(Var v) const {
    const Node& n = nodes_[static_cast<std::size_t>(v.index)];
    if (!n.requires_grad) throw Error("autodiff_no_grad");
    return n.grad;
}

}  // namespace safeforge::ad
