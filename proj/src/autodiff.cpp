#include "hsirecon/autodiff.hpp"

#include <algorithm>
#include <unordered_set>

namespace hsirecon::ad {

namespace {
thread_local bool g_grad_enabled = true;
}

void Node::accumulate(const Tensor& g)
{
    if (grad.empty())
        grad = g;
    else
        grad += g;
}

void Node::accumulate(Tensor&& g)
{
    if (grad.empty())
        grad = std::move(g);
    else
        grad += g;
}

Var Var::constant(Tensor value)
{
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Var(std::move(n));
}

Var Var::parameter(Tensor value)
{
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(std::move(n));
}

void Var::zero_grad()
{
    if (node_) node_->grad = Tensor();
}

Var make_result(Tensor value, std::vector<Var> parents, std::function<void(const Tensor&)> fn)
{
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (!g_grad_enabled) return Var(std::move(n));
    const bool any = std::any_of(parents.begin(), parents.end(), [](const Var& p) { return p.requires_grad(); });
    if (!any) return Var(std::move(n));
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (auto& p : parents)
        if (p.requires_grad()) n->parents.push_back(p.node());
    n->backward = std::move(fn);
    return Var(std::move(n));
}

void backward(const Var& loss)
{
    if (!loss.defined() || loss.value().size() != 1)
        throw ShapeError("backward() needs a single-element loss");
    if (!loss.requires_grad()) throw DetachedError("loss is detached from every parameter; nothing to differentiate");

    // iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->accumulate(Tensor(loss.value().shape(), 1.0));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && !n->grad.empty()) n->backward(n->grad);
    }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var ParamStore::add(const std::string& name, Tensor init)
{
    if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    entries_.emplace_back(name, Var::parameter(std::move(init)));
    return entries_.back().second;
}

const Var& ParamStore::get(const std::string& name) const
{
    for (const auto& [n, v] : entries_)
        if (n == name) return v;
    throw std::out_of_range("unknown parameter: " + name);
}

bool ParamStore::contains(const std::string& name) const
{
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

std::size_t ParamStore::scalar_count() const
{
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.second.value().size();
    return n;
}

void ParamStore::zero_grad()
{
    for (auto& e : entries_) e.second.zero_grad();
}

}  // namespace hsirecon::ad
