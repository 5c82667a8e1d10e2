#pragma once

#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "mrms/common.hpp"

namespace mrms {

// Forward / inference mode for layers with mode-dependent behaviour.
//   Train:      batch statistics, running-stat updates, dropout active.
//   EvalFrozen: batch statistics, no state mutation, dropout off. Used by the
//               dedicated train-loss evaluation pass.
//   Infer:      running statistics, dropout off.
enum class Mode { Train, EvalFrozen, Infer };

namespace detail {

struct TensorNode {
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated lazily, same element count as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    // Pulls this node's grad into the parents. `self` is passed in to avoid a
    // shared_ptr cycle through the closure.
    std::function<void(const TensorNode& self)> backprop;

    std::size_t size() const { return value.size(); }

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

inline std::size_t shape_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        require(d > 0, "tensor dimensions must be positive");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

}  // namespace detail

// An n-dimensional value participating in reverse-mode differentiation.
// Row-major storage throughout the library. Copying a Tensor copies the
// handle; the underlying node is shared.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
        auto node = std::make_shared<detail::TensorNode>();
        std::size_t n = detail::shape_count(shape);
        node->shape = std::move(shape);
        node->value.assign(n, 0.0);
        node->requires_grad = requires_grad;
        return Tensor(std::move(node));
    }

    static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                            bool requires_grad = false) {
        std::size_t n = detail::shape_count(shape);
        require(n == data.size(), "tensor data size does not match shape");
        auto node = std::make_shared<detail::TensorNode>();
        node->shape = std::move(shape);
        node->value = std::move(data);
        node->requires_grad = requires_grad;
        return Tensor(std::move(node));
    }

    static Tensor scalar(double v) { return from_data({1}, {v}); }

    bool valid() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    int dim(std::size_t i) const { return node_->shape.at(i); }
    std::size_t ndim() const { return node_->shape.size(); }
    std::size_t size() const { return node_->size(); }

    std::vector<double>& data() { return node_->value; }
    const std::vector<double>& data() const { return node_->value; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool v) { node_->requires_grad = v; }

    std::vector<double>& grad() {
        node_->ensure_grad();
        return node_->grad;
    }
    const std::vector<double>& grad() const {
        node_->ensure_grad();
        return node_->grad;
    }
    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

    double item() const {
        require(node_->size() == 1, "item(): tensor is not a scalar");
        return node_->value[0];
    }

    // New leaf sharing no graph history with this tensor.
    Tensor detach() const {
        auto node = std::make_shared<detail::TensorNode>();
        node->shape = node_->shape;
        node->value = node_->value;
        return Tensor(std::move(node));
    }

    std::shared_ptr<detail::TensorNode> node() const { return node_; }

    explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::TensorNode> node_;
};

// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
// reachable node with requires_grad set.
inline void backward(const Tensor& loss) {
    require(loss.size() == 1, "backward: loss must be scalar");

    std::vector<detail::TensorNode*> order;
    std::unordered_set<detail::TensorNode*> seen;
    std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::TensorNode* parent = node->parents[next++].get();
            if (parent->requires_grad && seen.insert(parent).second)
                stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::TensorNode* node = *it;
        if (node->backprop) node->backprop(*node);
    }
}

namespace detail {

// Build a result node wired to its parents; `fn` runs during the backward
// sweep with the result's grad populated.
inline Tensor make_op(std::vector<int> shape, std::vector<double> value,
                      std::vector<Tensor> inputs,
                      std::function<void(const TensorNode&)> fn) {
    auto node = std::make_shared<TensorNode>();
    require(shape_count(shape) == value.size(), "make_op: shape/value mismatch");
    node->shape = std::move(shape);
    node->value = std::move(value);
    bool needs = false;
    for (const auto& t : inputs) needs = needs || t.requires_grad();
    node->requires_grad = needs;
    if (needs) {
        for (const auto& t : inputs) node->parents.push_back(t.node());
        node->backprop = std::move(fn);
    }
    return Tensor(std::move(node));
}

}  // namespace detail

}  // namespace mrms
