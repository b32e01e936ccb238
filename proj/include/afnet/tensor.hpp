#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "afnet/common.hpp"

namespace afnet {

// N x C x H x W, row-major.
struct Shape {
    int n = 0, c = 0, h = 0, w = 0;

    Shape() = default;
    Shape(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {}

    std::size_t numel() const {
        return std::size_t(n) * std::size_t(c) * std::size_t(h) * std::size_t(w);
    }
    std::size_t index(int in, int ic, int iy, int ix) const {
        return ((std::size_t(in) * c + ic) * h + iy) * w + ix;
    }
    bool operator==(const Shape& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
    bool operator!=(const Shape& o) const { return !(*this == o); }

    std::string str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
               std::to_string(w);
    }
};

// One recorded operation. `parents` are the input references and the
// backward closure carries whatever intermediates the op saved. Leaves
// (parameters, inputs) have no parents and no backward.
template <typename T>
struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // allocated on first backward through this node
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
};

// Handle to a graph node; copies share the node. All numeric state lives
// in the node so identical handles see identical buffers.
template <typename T>
class Tensor {
public:
    using Scalar = T;

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

    static Tensor zeros(Shape s, bool requires_grad = false) {
        return filled(s, T(0), requires_grad);
    }
    static Tensor filled(Shape s, T v, bool requires_grad = false) {
        auto n = std::make_shared<Node<T>>();
        n->shape = s;
        n->value.assign(s.numel(), v);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }
    static Tensor from_data(Shape s, std::vector<T> data, bool requires_grad = false) {
        if (data.size() != s.numel())
            throw DimensionError("tensor data length " + std::to_string(data.size()) +
                                 " does not match shape " + s.str());
        auto n = std::make_shared<Node<T>>();
        n->shape = s;
        n->value = std::move(data);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }
    static Tensor uniform(Shape s, Rng& rng, T lo, T hi, bool requires_grad = false) {
        Tensor t = zeros(s, requires_grad);
        for (auto& v : t.data()) v = T(rng.uniform(double(lo), double(hi)));
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t numel() const { return node_->shape.numel(); }

    std::vector<T>& data() { return node_->value; }
    const std::vector<T>& data() const { return node_->value; }
    T& at(int n, int c, int y, int x) { return node_->value[node_->shape.index(n, c, y, x)]; }
    T at(int n, int c, int y, int x) const { return node_->value[node_->shape.index(n, c, y, x)]; }

    bool requires_grad() const { return node_->requires_grad; }
    std::vector<T>& grad() {
        node_->ensure_grad();
        return node_->grad;
    }
    void zero_grad() {
        if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
    }

    // Copies the values into a fresh leaf outside the graph.
    Tensor detach() const {
        auto n = std::make_shared<Node<T>>();
        n->shape = node_->shape;
        n->value = node_->value;
        n->requires_grad = false;
        return Tensor(std::move(n));
    }

    template <typename U>
    Tensor<U> cast() const {
        auto out = Tensor<U>::zeros(shape());
        const auto& src = data();
        auto& dst = out.data();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = U(src[i]);
        return out;
    }

    void backward() { backward(std::vector<T>(numel(), T(1))); }

    void backward(const std::vector<T>& seed) {
        if (seed.size() != numel()) throw DimensionError("backward seed shape mismatch");
        // Depth-first topological order over ancestors, then reverse sweep.
        std::vector<Node<T>*> order;
        std::unordered_set<Node<T>*> seen;
        std::vector<std::pair<Node<T>*, std::size_t>> stack;
        stack.push_back({node_.get(), 0});
        seen.insert(node_.get());
        while (!stack.empty()) {
            auto& [nd, next] = stack.back();
            if (next < nd->parents.size()) {
                Node<T>* p = nd->parents[next++].get();
                if (seen.insert(p).second) stack.push_back({p, 0});
            } else {
                order.push_back(nd);
                stack.pop_back();
            }
        }
        node_->ensure_grad();
        for (std::size_t i = 0; i < seed.size(); ++i) node_->grad[i] += seed[i];
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node<T>* nd = *it;
            if (nd->backward_fn && nd->requires_grad) nd->backward_fn(*nd);
        }
    }

    std::shared_ptr<Node<T>> node_;
};

namespace detail {

template <typename T>
inline void check_finite(const std::vector<T>& v, const char* op) {
    for (const T x : v)
        if (!std::isfinite(double(x)))
            throw NumericError(std::string("non-finite value produced by ") + op);
}

// Builds a result node. `backward` receives (result node) and must
// accumulate into the parents' grad buffers; it is dropped entirely when
// no parent needs gradients or recording is off.
template <typename T>
inline Tensor<T> make_op(const char* op, Shape shape, std::vector<T> value,
                         std::vector<Tensor<T>> parents,
                         std::function<void(Node<T>&)> backward) {
    auto n = std::make_shared<Node<T>>();
    n->shape = shape;
    n->value = std::move(value);
    n->op = op;
    bool needs = false;
    if (grad_enabled())
        for (const auto& p : parents) needs = needs || p.node_->requires_grad;
    if (needs) {
        n->requires_grad = true;
        n->parents.reserve(parents.size());
        for (auto& p : parents) n->parents.push_back(p.node_);
        n->backward_fn = std::move(backward);
    }
    if (checked_mode()) check_finite(n->value, op);
    return Tensor<T>(std::move(n));
}

template <typename T>
inline std::vector<T>& grad_of(const std::shared_ptr<Node<T>>& n) {
    n->ensure_grad();
    return n->grad;
}

}  // namespace detail

// FNV-1a over the raw value bytes; used to assert parameter isolation in
// the training loop tests.
template <typename T>
inline std::uint64_t value_hash(const Tensor<T>& t) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto& v = t.data();
    const unsigned char* p = reinterpret_cast<const unsigned char*>(v.data());
    for (std::size_t i = 0; i < v.size() * sizeof(T); ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace afnet
