#pragma once

// Minimal tape-free reverse-mode differentiation. Each operation returns a Var
// whose node remembers its parents and a closure that pushes the incoming
// gradient to them. backward() topologically sorts the reachable graph once
// and runs the closures in reverse order.

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hsirecon/tensor.hpp"

namespace hsirecon::ad {

/// A loss that does not depend on any parameter cannot be differentiated.
class DetachedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(const Tensor&)> backward;

    void accumulate(const Tensor& g);
    void accumulate(Tensor&& g);
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Var constant(Tensor value);
    static Var parameter(Tensor value);

    const Tensor& value() const { return node_->value; }
    Tensor& mutable_value() { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    bool defined() const { return node_ != nullptr; }
    const std::shared_ptr<Node>& node() const { return node_; }

    void zero_grad();

private:
    std::shared_ptr<Node> node_;
};

/// Builds the result of an operation. When gradients are disabled or no
/// parent requires one, the result is a plain constant and `fn` is dropped.
Var make_result(Tensor value, std::vector<Var> parents, std::function<void(const Tensor&)> fn);

/// Runs reverse accumulation from a scalar (single-element) loss.
void backward(const Var& loss);

bool grad_enabled();

/// Disables graph construction in its scope (inference).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Named learnable arrays in insertion order.
class ParamStore {
public:
    Var add(const std::string& name, Tensor init);
    const Var& get(const std::string& name) const;
    bool contains(const std::string& name) const;

    const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
    std::size_t scalar_count() const;
    void zero_grad();

private:
    std::vector<std::pair<std::string, Var>> entries_;
};

}  // namespace hsirecon::ad
