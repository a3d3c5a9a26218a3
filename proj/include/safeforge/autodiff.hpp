// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

namespace safeforge::ad {

class Graph;

// Handle into the tape; cheap to copy.
struct Var {
    Graph* graph = nullptr;
    int index = -1;

    const Eigen::MatrixXd& value() const;
};

// Reverse-mode tape over Eigen matrices. Nodes are created in evaluation
// order; backward() walks the tape in reverse. With recording disabled the
// same ops run value-only, so inference and training share one numeric path.
class Graph {
public:
    explicit Graph(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }

    Var constant(Eigen::MatrixXd value);
    // Trainable input; gradient is accumulated on backward().
    Var leaf(const Eigen::MatrixXd& value);

    Var matmul(Var a, Var b);
    // a * b^T without materializing the transpose node.
    Var matmul_nt(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var cmul(Var a, Var b);
    // matrix + row vector broadcast over rows
    Var add_rowvec(Var a, Var row);
    Var scale(Var a, double s);
    // a + s * b
    Var add_scaled(Var a, Var b, double s);
    Var tanh_(Var a);
    Var softmax_rows(Var a);
    Var mean_all(Var a);  // 1x1
    Var sum_all(Var a);   // 1x1

    void backward(Var scalar_output);

    const Eigen::MatrixXd& value(Var v) const { return nodes_[v.index].value; }
    const Eigen::MatrixXd& grad(Var v) const;

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Eigen::MatrixXd value;
        Eigen::MatrixXd grad;
        bool requires_grad = false;
        std::function<void(Graph&, const Node&)> back;  // null for inputs
    };

    Var push(Eigen::MatrixXd value, bool requires_grad,
             std::function<void(Graph&, const Node&)> back);
    void accumulate(int index, const Eigen::MatrixXd& delta);

    std::vector<Node> nodes_;
    bool recording_;

    friend struct Var;
};

}  // namespace safeforge::ad
