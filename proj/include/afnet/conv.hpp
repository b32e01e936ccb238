#pragma once

#include <cstdint>
#include <vector>

#include "afnet/ops.hpp"
#include "afnet/tensor.hpp"

namespace afnet {

inline int conv_out_dim(int in, int kernel, int stride, int padding) {
    return (in + 2 * padding - kernel) / stride + 1;
}

namespace detail {

// Unpacks one input channel-group into a [Cg*K*K, Hout*Wout] column matrix
// (cross-correlation layout, zero padding).
template <typename T>
void im2col(const T* x, int cg, int h, int w, int k, int stride, int pad, int oh, int ow,
            T* col) {
    const std::size_t plane = std::size_t(h) * w;
    const std::size_t ocols = std::size_t(oh) * ow;
    for (int c = 0; c < cg; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                T* dst = col + ((std::size_t(c) * k + ky) * k + kx) * ocols;
                const T* src = x + c * plane;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        for (int ox = 0; ox < ow; ++ox) dst[oy * std::size_t(ow) + ox] = T(0);
                        continue;
                    }
                    const T* row = src + std::size_t(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst[oy * std::size_t(ow) + ox] = (ix >= 0 && ix < w) ? row[ix] : T(0);
                    }
                }
            }
}

template <typename T>
void col2im_add(const T* col, int cg, int h, int w, int k, int stride, int pad, int oh, int ow,
                T* gx) {
    const std::size_t plane = std::size_t(h) * w;
    const std::size_t ocols = std::size_t(oh) * ow;
    for (int c = 0; c < cg; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const T* src = col + ((std::size_t(c) * k + ky) * k + kx) * ocols;
                T* dst = gx + c * plane;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    T* row = dst + std::size_t(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w) row[ix] += src[oy * std::size_t(ow) + ox];
                    }
                }
            }
}

}  // namespace detail

// 2-D convolution, cross-correlation convention, zero padding.
//   input  N x Cin x H x W
//   weight Cout x Cin/groups x K x K
//   bias   1 x Cout x 1 x 1 (optional: pass an undefined tensor to skip)
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 int stride = 1, int padding = 0, int groups = 1) {
    const Shape xs = input.shape();
    const Shape ws = weight.shape();
    if (stride < 1) throw ParameterError("conv2d: stride must be >= 1");
    if (padding < 0) throw ParameterError("conv2d: padding must be >= 0");
    if (groups < 1 || xs.c % groups != 0 || ws.n % groups != 0)
        throw DimensionError("conv2d: channels not divisible by groups");
    if (ws.h != ws.w) throw DimensionError("conv2d: only square kernels supported");
    if (ws.c != xs.c / groups)
        throw DimensionError("conv2d: weight expects " + std::to_string(ws.c * groups) +
                             " input channels, got " + std::to_string(xs.c));
    const bool has_bias = bias.defined();
    if (has_bias && (bias.numel() != std::size_t(ws.n)))
        throw DimensionError("conv2d: bias size must equal output channels");
    if (checked_mode()) detail::check_finite(weight.data(), "conv2d weights");

    const int k = ws.h;
    const int oh = conv_out_dim(xs.h, k, stride, padding);
    const int ow = conv_out_dim(xs.w, k, stride, padding);
    if (oh < 1 || ow < 1) throw DimensionError("conv2d: output would be empty");
    const Shape os(xs.n, ws.n, oh, ow);

    const int cg = xs.c / groups;       // input channels per group
    const int og = ws.n / groups;       // output channels per group
    const std::size_t kdim = std::size_t(cg) * k * k;
    const std::size_t ocols = std::size_t(oh) * ow;
    const std::size_t in_group = std::size_t(cg) * xs.h * xs.w;

    std::vector<T> out(os.numel());
    std::vector<T> col(kdim * ocols);
    const auto& xv = input.data();
    const auto& wv = weight.data();
    const T* bv = has_bias ? bias.data().data() : nullptr;

    for (int n = 0; n < xs.n; ++n)
        for (int g = 0; g < groups; ++g) {
            detail::im2col(xv.data() + (std::size_t(n) * xs.c + g * cg) * xs.h * xs.w, cg, xs.h,
                           xs.w, k, stride, padding, oh, ow, col.data());
            for (int m = 0; m < og; ++m) {
                const int oc = g * og + m;
                T* orow = out.data() + (std::size_t(n) * ws.n + oc) * ocols;
                const T b = bv ? bv[oc] : T(0);
                for (std::size_t i = 0; i < ocols; ++i) orow[i] = b;
                const T* wrow = wv.data() + std::size_t(oc) * kdim;
                for (std::size_t kk = 0; kk < kdim; ++kk) {
                    const T f = wrow[kk];
                    const T* crow = col.data() + kk * ocols;
                    for (std::size_t i = 0; i < ocols; ++i) orow[i] += f * crow[i];
                }
            }
        }

    auto xn = input.node_;
    auto wn = weight.node_;
    auto bn = has_bias ? bias.node_ : nullptr;
    std::vector<Tensor<T>> parents{input, weight};
    if (has_bias) parents.push_back(bias);

    auto backward = [xn, wn, bn, xs, ws, os, stride, padding, groups, cg, og, kdim, ocols,
                     in_group, k](Node<T>& r) {
        std::vector<T> col(kdim * ocols);
        std::vector<T> gcol;
        const bool need_x = xn->requires_grad;
        const bool need_w = wn->requires_grad;
        if (need_x) gcol.assign(kdim * ocols, T(0));
        for (int n = 0; n < xs.n; ++n)
            for (int g = 0; g < groups; ++g) {
                if (need_w || need_x)
                    detail::im2col(xn->value.data() + (std::size_t(n) * xs.c + g * cg) * xs.h * xs.w,
                                   cg, xs.h, xs.w, k, stride, padding, os.h, os.w, col.data());
                if (need_x) std::fill(gcol.begin(), gcol.end(), T(0));
                for (int m = 0; m < og; ++m) {
                    const int oc = g * og + m;
                    const T* grow = r.grad.data() + (std::size_t(n) * ws.n + oc) * ocols;
                    if (need_w) {
                        T* gw = detail::grad_of(wn).data() + std::size_t(oc) * kdim;
                        for (std::size_t kk = 0; kk < kdim; ++kk) {
                            const T* crow = col.data() + kk * ocols;
                            T acc = T(0);
                            for (std::size_t i = 0; i < ocols; ++i) acc += grow[i] * crow[i];
                            gw[kk] += acc;
                        }
                    }
                    if (need_x) {
                        const T* wrow = wn->value.data() + std::size_t(oc) * kdim;
                        for (std::size_t kk = 0; kk < kdim; ++kk) {
                            const T f = wrow[kk];
                            T* gcrow = gcol.data() + kk * ocols;
                            for (std::size_t i = 0; i < ocols; ++i) gcrow[i] += f * grow[i];
                        }
                    }
                    if (bn && bn->requires_grad) {
                        T acc = T(0);
                        for (std::size_t i = 0; i < ocols; ++i) acc += grow[i];
                        detail::grad_of(bn)[oc] += acc;
                    }
                }
                if (need_x)
                    detail::col2im_add(gcol.data(), cg, xs.h, xs.w, k, stride, padding, os.h, os.w,
                                       detail::grad_of(xn).data() +
                                           std::size_t(n) * xs.c * xs.h * xs.w +
                                           std::size_t(g) * in_group);
            }
    };

    return detail::make_op<T>("conv2d", os, std::move(out), std::move(parents), backward);
}

// Analytic multiply-accumulate count for a conv layer: K*K*(Cin/g)*Cout*Hout*Wout.
inline std::uint64_t conv_macs(int k, int cin, int cout, int groups, int oh, int ow) {
    return std::uint64_t(k) * k * (std::uint64_t(cin) / groups) * std::uint64_t(cout) *
           std::uint64_t(oh) * std::uint64_t(ow);
}

inline std::uint64_t fc_macs(int cin, int cout) {
    return std::uint64_t(cin) * std::uint64_t(cout);
}

// Per-layer (name, MACs) accounting rows.
using MacEntries = std::vector<std::pair<std::string, std::uint64_t>>;

// Convolution layer owning its parameters.
template <typename T>
struct Conv2d {
    int in_channels = 0, out_channels = 0, kernel = 1, stride = 1, padding = 0, groups = 1;
    bool has_bias = true;
    Tensor<T> weight, bias;

    Conv2d() = default;
    Conv2d(int cin, int cout, int k, int stride_ = 1, int padding_ = 0, int groups_ = 1,
           bool bias_ = true)
        : in_channels(cin),
          out_channels(cout),
          kernel(k),
          stride(stride_),
          padding(padding_),
          groups(groups_),
          has_bias(bias_) {}

    // Fan-in scaled uniform weights, zero bias.
    void init(Rng& rng) {
        const int fan_in = kernel * kernel * in_channels / groups;
        const T bound = T(std::sqrt(6.0 / double(fan_in)));
        weight = Tensor<T>::uniform(Shape(out_channels, in_channels / groups, kernel, kernel), rng,
                                    -bound, bound, true);
        if (has_bias) bias = Tensor<T>::zeros(Shape(1, out_channels, 1, 1), true);
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        return conv2d(x, weight, has_bias ? bias : Tensor<T>(), stride, padding, groups);
    }

    int out_dim(int in) const { return conv_out_dim(in, kernel, stride, padding); }

    std::uint64_t macs(int h, int w) const {
        return conv_macs(kernel, in_channels, out_channels, groups, out_dim(h), out_dim(w));
    }

    void collect_macs(const std::string& prefix, int h, int w, MacEntries& out) const {
        out.emplace_back(prefix, macs(h, w));
    }

    void collect_params(const std::string& prefix, std::vector<std::pair<std::string, Tensor<T>>>& out) const {
        out.emplace_back(prefix + ".weight", weight);
        if (has_bias) out.emplace_back(prefix + ".bias", bias);
    }
};

}  // namespace afnet
