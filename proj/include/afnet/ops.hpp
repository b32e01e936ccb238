#pragma once

#include <cmath>
#include <vector>

#include "afnet/tensor.hpp"

namespace afnet {

namespace detail {

template <typename T, typename FwdFn, typename BwdFn>
inline Tensor<T> unary_op(const char* name, const Tensor<T>& x, FwdFn fwd, BwdFn dfdx_from_xy) {
    const auto& xv = x.data();
    std::vector<T> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
    auto xn = x.node_;
    return make_op<T>(
        name, x.shape(), std::move(out), {x}, [xn, dfdx_from_xy](Node<T>& r) {
            auto& gx = grad_of(xn);
            for (std::size_t i = 0; i < gx.size(); ++i)
                gx[i] += r.grad[i] * dfdx_from_xy(xn->value[i], r.value[i]);
        });
}

template <typename T, typename FwdFn, typename DaFn, typename DbFn>
inline Tensor<T> binary_op(const char* name, const Tensor<T>& a, const Tensor<T>& b, FwdFn fwd,
                           DaFn dfda, DbFn dfdb) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(name) + ": shape mismatch " + a.shape().str() + " vs " +
                             b.shape().str());
    const auto& av = a.data();
    const auto& bv = b.data();
    std::vector<T> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i], bv[i]);
    auto an = a.node_;
    auto bn = b.node_;
    return make_op<T>(name, a.shape(), std::move(out), {a, b}, [an, bn, dfda, dfdb](Node<T>& r) {
        if (an->requires_grad) {
            auto& ga = grad_of(an);
            for (std::size_t i = 0; i < ga.size(); ++i)
                ga[i] += r.grad[i] * dfda(an->value[i], bn->value[i]);
        }
        if (bn->requires_grad) {
            auto& gb = grad_of(bn);
            for (std::size_t i = 0; i < gb.size(); ++i)
                gb[i] += r.grad[i] * dfdb(an->value[i], bn->value[i]);
        }
    });
}

}  // namespace detail

// ---- elementwise arithmetic ----

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return detail::binary_op<T>(
        "add", a, b, [](T x, T y) { return x + y; }, [](T, T) { return T(1); },
        [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return detail::binary_op<T>(
        "sub", a, b, [](T x, T y) { return x - y; }, [](T, T) { return T(1); },
        [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return detail::binary_op<T>(
        "mul", a, b, [](T x, T y) { return x * y; }, [](T, T y) { return y; },
        [](T x, T) { return x; });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
    return detail::binary_op<T>(
        "div", a, b, [](T x, T y) { return x / y; }, [](T, T y) { return T(1) / y; },
        [](T x, T y) { return -x / (y * y); });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T c) {
    return detail::unary_op<T>(
        "add_scalar", x, [c](T v) { return v + c; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& x, T c) {
    return detail::unary_op<T>(
        "mul_scalar", x, [c](T v) { return v * c; }, [c](T, T) { return c; });
}

template <typename T>
Tensor<T> square(const Tensor<T>& x) {
    return detail::unary_op<T>(
        "square", x, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
Tensor<T> sqrt_op(const Tensor<T>& x) {
    return detail::unary_op<T>(
        "sqrt", x, [](T v) { return std::sqrt(v); },
        [](T, T y) { return T(0.5) / y; });
}

template <typename T>
Tensor<T> abs_op(const Tensor<T>& x) {
    return detail::unary_op<T>(
        "abs", x, [](T v) { return std::abs(v); },
        [](T v, T) { return v >= T(0) ? T(1) : T(-1); });
}

template <typename T>
Tensor<T> exp_op(const Tensor<T>& x) {
    return detail::unary_op<T>(
        "exp", x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log_op(const Tensor<T>& x) {
    return detail::unary_op<T>(
        "log", x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <typename T>
Tensor<T> pow_const(const Tensor<T>& x, T p) {
    return detail::unary_op<T>(
        "pow_const", x, [p](T v) { return std::pow(v, p); },
        [p](T v, T) { return p * std::pow(v, p - T(1)); });
}

// log(1 + e^x), evaluated without overflow.
template <typename T>
Tensor<T> softplus(const Tensor<T>& x) {
    return detail::unary_op<T>(
        "softplus", x,
        [](T v) { return v > T(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
        [](T v, T) { return T(1) / (T(1) + std::exp(-v)); });
}

// ---- activations ----

enum class Act { Relu, LeakyRelu, Sigmoid, Tanh };

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    return detail::unary_op<T>(
        "relu", x, [](T v) { return v > T(0) ? v : T(0); },
        [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope = T(0.2)) {
    return detail::unary_op<T>(
        "leaky_relu", x, [slope](T v) { return v > T(0) ? v : slope * v; },
        [slope](T v, T) { return v > T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    return detail::unary_op<T>(
        "sigmoid", x, [](T v) { return T(1) / (T(1) + std::exp(-v)); },
        [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& x) {
    return detail::unary_op<T>(
        "tanh", x, [](T v) { return std::tanh(v); },
        [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> activation(Act kind, const Tensor<T>& x) {
    switch (kind) {
        case Act::Relu: return relu(x);
        case Act::LeakyRelu: return leaky_relu(x, T(0.2));
        case Act::Sigmoid: return sigmoid(x);
        case Act::Tanh: return tanh_op(x);
    }
    throw ParameterError("unknown activation kind");
}

// ---- reductions ----

// Per-channel spatial mean -> N x C x 1 x 1.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
    const Shape s = x.shape();
    if (s.h < 1 || s.w < 1) throw DimensionError("global_avg_pool: empty spatial dims");
    const std::size_t plane = std::size_t(s.h) * s.w;
    std::vector<T> out(std::size_t(s.n) * s.c);
    const auto& xv = x.data();
    for (std::size_t nc = 0; nc < out.size(); ++nc) {
        T acc = T(0);
        const T* p = xv.data() + nc * plane;
        for (std::size_t i = 0; i < plane; ++i) acc += p[i];
        out[nc] = acc / T(plane);
    }
    auto xn = x.node_;
    return detail::make_op<T>(
        "global_avg_pool", Shape(s.n, s.c, 1, 1), std::move(out), {x}, [xn, plane](Node<T>& r) {
            auto& gx = detail::grad_of(xn);
            for (std::size_t nc = 0; nc < r.value.size(); ++nc) {
                const T g = r.grad[nc] / T(plane);
                T* p = gx.data() + nc * plane;
                for (std::size_t i = 0; i < plane; ++i) p[i] += g;
            }
        });
}

// Mean over every element -> 1 x 1 x 1 x 1.
template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& x) {
    const std::size_t n = x.numel();
    T acc = T(0);
    for (const T v : x.data()) acc += v;
    auto xn = x.node_;
    std::vector<T> out{acc / T(n)};
    return detail::make_op<T>("reduce_mean", Shape(1, 1, 1, 1), std::move(out), {x},
                              [xn, n](Node<T>& r) {
                                  auto& gx = detail::grad_of(xn);
                                  const T g = r.grad[0] / T(n);
                                  for (auto& v : gx) v += g;
                              });
}

template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& x) {
    T acc = T(0);
    for (const T v : x.data()) acc += v;
    auto xn = x.node_;
    std::vector<T> out{acc};
    return detail::make_op<T>("reduce_sum", Shape(1, 1, 1, 1), std::move(out), {x},
                              [xn](Node<T>& r) {
                                  auto& gx = detail::grad_of(xn);
                                  for (auto& v : gx) v += r.grad[0];
                              });
}

template <typename T>
T scalar_value(const Tensor<T>& t) {
    if (t.numel() != 1) throw DimensionError("scalar_value: tensor is not a scalar");
    return t.data()[0];
}

// Per-item channel dot product of two N x C x 1 x 1 tensors -> N x 1 x 1 x 1.
template <typename T>
Tensor<T> dot_channels(const Tensor<T>& a, const Tensor<T>& b) {
    const Shape s = a.shape();
    if (s != b.shape() || s.h != 1 || s.w != 1)
        throw DimensionError("dot_channels: expects matching NxCx1x1 tensors");
    std::vector<T> out(s.n, T(0));
    const auto& av = a.data();
    const auto& bv = b.data();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) out[n] += av[n * s.c + c] * bv[n * s.c + c];
    auto an = a.node_;
    auto bn = b.node_;
    return detail::make_op<T>(
        "dot_channels", Shape(s.n, 1, 1, 1), std::move(out), {a, b}, [an, bn, s](Node<T>& r) {
            auto& ga = detail::grad_of(an);
            auto& gb = detail::grad_of(bn);
            for (int n = 0; n < s.n; ++n)
                for (int c = 0; c < s.c; ++c) {
                    ga[n * s.c + c] += r.grad[n] * bn->value[n * s.c + c];
                    gb[n * s.c + c] += r.grad[n] * an->value[n * s.c + c];
                }
        });
}

// ---- channel layout ----

// Contiguous channel slice [start, start+count).
template <typename T>
Tensor<T> narrow_channels(const Tensor<T>& x, int start, int count) {
    const Shape s = x.shape();
    if (start < 0 || count < 1 || start + count > s.c)
        throw DimensionError("narrow_channels: slice out of range");
    const Shape os(s.n, count, s.h, s.w);
    const std::size_t plane = std::size_t(s.h) * s.w;
    std::vector<T> out(os.numel());
    const auto& xv = x.data();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < count; ++c)
            std::copy_n(xv.data() + (std::size_t(n) * s.c + start + c) * plane, plane,
                        out.data() + (std::size_t(n) * count + c) * plane);
    auto xn = x.node_;
    return detail::make_op<T>(
        "narrow_channels", os, std::move(out), {x}, [xn, s, start, count, plane](Node<T>& r) {
            auto& gx = detail::grad_of(xn);
            for (int n = 0; n < s.n; ++n)
                for (int c = 0; c < count; ++c) {
                    const T* g = r.grad.data() + (std::size_t(n) * count + c) * plane;
                    T* dst = gx.data() + (std::size_t(n) * s.c + start + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) dst[i] += g[i];
                }
        });
}

// Order-preserving split into S equal channel groups.
template <typename T>
std::vector<Tensor<T>> channel_split(const Tensor<T>& x, int parts) {
    const Shape s = x.shape();
    if (parts < 1 || s.c % parts != 0)
        throw ParameterError("channel_split: " + std::to_string(s.c) +
                             " channels not divisible by " + std::to_string(parts));
    std::vector<Tensor<T>> out;
    const int step = s.c / parts;
    out.reserve(parts);
    for (int p = 0; p < parts; ++p) out.push_back(narrow_channels(x, p * step, step));
    return out;
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs) {
    if (xs.empty()) throw DimensionError("concat_channels: empty input list");
    const Shape s0 = xs[0].shape();
    int ctot = 0;
    for (const auto& x : xs) {
        const Shape s = x.shape();
        if (s.n != s0.n || s.h != s0.h || s.w != s0.w)
            throw DimensionError("concat_channels: mismatched shapes");
        ctot += s.c;
    }
    const Shape os(s0.n, ctot, s0.h, s0.w);
    const std::size_t plane = std::size_t(s0.h) * s0.w;
    std::vector<T> out(os.numel());
    int coff = 0;
    for (const auto& x : xs) {
        const int c = x.shape().c;
        for (int n = 0; n < s0.n; ++n)
            std::copy_n(x.data().data() + std::size_t(n) * c * plane, std::size_t(c) * plane,
                        out.data() + (std::size_t(n) * ctot + coff) * plane);
        coff += c;
    }
    std::vector<std::shared_ptr<Node<T>>> pn;
    for (const auto& x : xs) pn.push_back(x.node_);
    return detail::make_op<T>(
        "concat_channels", os, std::move(out), xs, [pn, ctot, plane](Node<T>& r) {
            const int n_items = r.shape.n;
            int coff = 0;
            for (const auto& p : pn) {
                const int c = p->shape.c;
                auto& gp = detail::grad_of(p);
                for (int n = 0; n < n_items; ++n) {
                    const T* g = r.grad.data() + (std::size_t(n) * ctot + coff) * plane;
                    T* dst = gp.data() + std::size_t(n) * c * plane;
                    for (std::size_t i = 0; i < std::size_t(c) * plane; ++i) dst[i] += g[i];
                }
                coff += c;
            }
        });
}

// x (NxCxHxW) scaled per channel by w (NxCx1x1).
template <typename T>
Tensor<T> broadcast_mul(const Tensor<T>& x, const Tensor<T>& w) {
    const Shape s = x.shape();
    const Shape ws = w.shape();
    if (ws.n != s.n || ws.c != s.c || ws.h != 1 || ws.w != 1)
        throw DimensionError("broadcast_mul: weights must be NxCx1x1 matching x");
    const std::size_t plane = std::size_t(s.h) * s.w;
    std::vector<T> out(x.numel());
    const auto& xv = x.data();
    const auto& wv = w.data();
    for (std::size_t nc = 0; nc < wv.size(); ++nc) {
        const T f = wv[nc];
        const T* p = xv.data() + nc * plane;
        T* o = out.data() + nc * plane;
        for (std::size_t i = 0; i < plane; ++i) o[i] = p[i] * f;
    }
    auto xn = x.node_;
    auto wn = w.node_;
    return detail::make_op<T>(
        "broadcast_mul", s, std::move(out), {x, w}, [xn, wn, plane](Node<T>& r) {
            auto& gx = detail::grad_of(xn);
            auto& gw = detail::grad_of(wn);
            for (std::size_t nc = 0; nc < wn->value.size(); ++nc) {
                const T f = wn->value[nc];
                const T* g = r.grad.data() + nc * plane;
                const T* xp = xn->value.data() + nc * plane;
                T* gxp = gx.data() + nc * plane;
                T acc = T(0);
                for (std::size_t i = 0; i < plane; ++i) {
                    gxp[i] += g[i] * f;
                    acc += g[i] * xp[i];
                }
                gw[nc] += acc;
            }
        });
}

// Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B.
template <typename T>
Tensor<T> grayscale(const Tensor<T>& rgb) {
    const Shape s = rgb.shape();
    if (s.c != 3) throw DimensionError("grayscale: expected 3 channels, got " + std::to_string(s.c));
    static constexpr double kW[3] = {0.299, 0.587, 0.114};
    const std::size_t plane = std::size_t(s.h) * s.w;
    std::vector<T> out(std::size_t(s.n) * plane, T(0));
    const auto& xv = rgb.data();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < 3; ++c) {
            const T* p = xv.data() + (std::size_t(n) * 3 + c) * plane;
            T* o = out.data() + std::size_t(n) * plane;
            const T f = T(kW[c]);
            for (std::size_t i = 0; i < plane; ++i) o[i] += f * p[i];
        }
    auto xn = rgb.node_;
    return detail::make_op<T>(
        "grayscale", Shape(s.n, 1, s.h, s.w), std::move(out), {rgb}, [xn, plane](Node<T>& r) {
            auto& gx = detail::grad_of(xn);
            const int items = r.shape.n;
            for (int n = 0; n < items; ++n)
                for (int c = 0; c < 3; ++c) {
                    const T f = T(kW[c]);
                    const T* g = r.grad.data() + std::size_t(n) * plane;
                    T* dst = gx.data() + (std::size_t(n) * 3 + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) dst[i] += f * g[i];
                }
        });
}

// 2x2 stride-2 average pooling; odd trailing row/column is dropped.
template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& x) {
    const Shape s = x.shape();
    const int oh = s.h / 2, ow = s.w / 2;
    if (oh < 1 || ow < 1) throw DimensionError("avg_pool2: input too small");
    const Shape os(s.n, s.c, oh, ow);
    std::vector<T> out(os.numel());
    const auto& xv = x.data();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < oh; ++y)
                for (int xo = 0; xo < ow; ++xo) {
                    const std::size_t i0 = s.index(n, c, 2 * y, 2 * xo);
                    out[os.index(n, c, y, xo)] =
                        (xv[i0] + xv[i0 + 1] + xv[i0 + s.w] + xv[i0 + s.w + 1]) * T(0.25);
                }
    auto xn = x.node_;
    return detail::make_op<T>("avg_pool2", os, std::move(out), {x}, [xn, s, os](Node<T>& r) {
        auto& gx = detail::grad_of(xn);
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c)
                for (int y = 0; y < os.h; ++y)
                    for (int xo = 0; xo < os.w; ++xo) {
                        const T g = r.grad[os.index(n, c, y, xo)] * T(0.25);
                        const std::size_t i0 = s.index(n, c, 2 * y, 2 * xo);
                        gx[i0] += g;
                        gx[i0 + 1] += g;
                        gx[i0 + s.w] += g;
                        gx[i0 + s.w + 1] += g;
                    }
    });
}

}  // namespace afnet
