// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "klce/errors.hpp"

namespace klce {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (int e : s) n *= static_cast<std::size_t>(e);
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

namespace detail {

// One node of the recorded computation graph. Tensors are handles to nodes;
// an op's output node keeps shared references to its input nodes plus a
// closure that pushes the output gradient back into them. The DAG built this
// way is the per-step graph: acyclic, and backward() visits each node exactly
// once in reverse topological order.
template <typename S>
struct Node {
    Shape shape;
    std::vector<S> value;
    std::vector<S> grad; // allocated for leaves with requires_grad, lazily otherwise
    bool requires_grad = false;
    bool leaf = true;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;
};

} // namespace detail

// Dense N-dimensional value, optionally tracked by the reverse-mode engine.
// Canonical shapes: activations C x H x W, conv kernels O x C x 3 x 3,
// scalars [1]. S is float for training/inference, double for gradient checks.
template <typename S>
class Tensor {
public:
    using Node = detail::Node<S>;

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}

    static Tensor zeros(Shape shape) { return full(std::move(shape), S(0)); }

    static Tensor full(Shape shape, S v) {
        auto n = std::make_shared<Node>();
        n->value.assign(shape_numel(shape), v);
        n->shape = std::move(shape);
        return Tensor(std::move(n));
    }

    static Tensor from_data(Shape shape, std::vector<S> data) {
        if (data.size() != shape_numel(shape))
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        auto n = std::make_shared<Node>();
        n->shape = std::move(shape);
        n->value = std::move(data);
        return Tensor(std::move(n));
    }

    // Trainable leaf: gradient buffer allocated up front and persistent.
    static Tensor param(Shape shape, std::vector<S> data) {
        Tensor t = from_data(std::move(shape), std::move(data));
        t.n_->requires_grad = true;
        t.n_->grad.assign(t.numel(), S(0));
        return t;
    }

    static Tensor scalar(S v) { return full({1}, v); }

    bool defined() const { return static_cast<bool>(n_); }
    const Shape& shape() const { return n_->shape; }
    std::size_t numel() const { return n_->value.size(); }
    bool requires_grad() const { return n_->requires_grad; }

    S* data() { return n_->value.data(); }
    const S* data() const { return n_->value.data(); }
    std::vector<S>& values() { return n_->value; }
    const std::vector<S>& values() const { return n_->value; }

    S item() const {
        if (numel() != 1) throw InvalidArgument("item(): tensor is not scalar");
        return n_->value[0];
    }

    S* grad() { return n_->grad.data(); }
    const S* grad() const { return n_->grad.data(); }
    const std::vector<S>& grad_values() const { return n_->grad; }

    void zero_grad() {
        if (n_->requires_grad) n_->grad.assign(n_->value.size(), S(0));
    }

    // Leaf copy sharing no graph history.
    Tensor detach() const {
        auto n = std::make_shared<Node>();
        n->shape = n_->shape;
        n->value = n_->value;
        return Tensor(std::move(n));
    }

    const std::shared_ptr<Node>& node() const { return n_; }

private:
    std::shared_ptr<Node> n_;
};

namespace detail {

// Output-node factory used by every op. Inputs and the backward closure are
// recorded only when some input is tracked; untracked forwards build no graph.
template <typename S>
std::shared_ptr<Node<S>> make_op_node(Shape shape, const char* op,
                                      std::vector<std::shared_ptr<Node<S>>> inputs) {
    auto n = std::make_shared<Node<S>>();
    n->value.assign(shape_numel(shape), S(0));
    n->shape = std::move(shape);
    n->op = op;
    bool rg = false;
    for (const auto& in : inputs) rg = rg || in->requires_grad;
    if (rg) {
        n->requires_grad = true;
        n->leaf = false;
        n->inputs = std::move(inputs);
    }
    return n;
}

template <typename S>
void ensure_grad(Node<S>& n) {
    if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), S(0));
}

} // namespace detail

// Reverse-mode gradient accumulation. Seeds d(loss)/d(loss) = 1 and pushes
// gradients to every reachable tracked tensor. Leaf gradients accumulate
// across calls; interior gradients are reset per call so repeated backward
// passes over one graph contribute exact gradients each time.
template <typename S>
void backward(const Tensor<S>& loss) {
    if (loss.numel() != 1) throw InvalidArgument("backward: loss must be scalar");
    auto* root = loss.node().get();
    if (!root->requires_grad) return;

    // iterative post-order DFS -> topological order
    std::vector<detail::Node<S>*> topo;
    std::unordered_set<detail::Node<S>*> seen;
    std::vector<std::pair<detail::Node<S>*, std::size_t>> stack{{root, 0}};
    seen.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            auto* child = node->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second)
                stack.emplace_back(child, 0);
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    for (auto* n : topo) {
        if (n->leaf)
            detail::ensure_grad(*n); // persistent, accumulate
        else
            n->grad.assign(n->value.size(), S(0)); // fresh per backward pass
    }
    root->grad[0] += S(1);

    for (auto it = topo.rbegin(); it != topo.rend(); ++it)
        if ((*it)->backward) (*it)->backward(**it);
}

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

} // namespace klce
