#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "afnet/tensor.hpp"

namespace afnet {

// Positive rational scale factor for resampling.
struct Scale {
    int num = 1, den = 1;
    Scale() = default;
    Scale(int n, int d) : num(n), den(d) {
        if (n < 1 || d < 1) throw ParameterError("scale must be positive");
        const int g = std::gcd(n, d);
        num /= g;
        den /= g;
    }
    static Scale up(int f) { return Scale(f, 1); }
    bool is_identity() const { return num == den; }
};

namespace detail {

// Catmull-Rom family cubic, a = -0.5.
inline double bicubic_weight(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return (((t - 5.0) * t + 8.0) * t - 4.0) * a;
    return 0.0;
}

struct ResampleTaps {
    std::vector<int> idx;      // 4 per output position, clamped to the border
    std::vector<double> w;     // matching kernel weights
};

inline ResampleTaps bicubic_taps(int in_dim, int out_dim, const Scale& s) {
    ResampleTaps taps;
    taps.idx.resize(std::size_t(out_dim) * 4);
    taps.w.resize(std::size_t(out_dim) * 4);
    const double inv = double(s.den) / double(s.num);
    for (int o = 0; o < out_dim; ++o) {
        const double src = (o + 0.5) * inv - 0.5;
        const int i0 = int(std::floor(src));
        for (int t = 0; t < 4; ++t) {
            const int i = i0 - 1 + t;
            taps.idx[o * 4 + t] = std::clamp(i, 0, in_dim - 1);
            taps.w[o * 4 + t] = bicubic_weight(src - i);
        }
    }
    return taps;
}

}  // namespace detail

// Bicubic resampling (a = -0.5, border replication). The scale must give
// integral output dimensions.
template <typename T>
Tensor<T> bicubic_resample(const Tensor<T>& x, const Scale& scale) {
    const Shape s = x.shape();
    if ((std::int64_t(s.h) * scale.num) % scale.den != 0 ||
        (std::int64_t(s.w) * scale.num) % scale.den != 0)
        throw ParameterError("bicubic_resample: scale " + std::to_string(scale.num) + "/" +
                             std::to_string(scale.den) + " gives non-integral output size");
    const int oh = int(std::int64_t(s.h) * scale.num / scale.den);
    const int ow = int(std::int64_t(s.w) * scale.num / scale.den);
    const Shape os(s.n, s.c, oh, ow);

    const auto ytaps = detail::bicubic_taps(s.h, oh, scale);
    const auto xtaps = detail::bicubic_taps(s.w, ow, scale);

    // Separable: rows first (H x W -> H x ow), then columns.
    const std::size_t planes = std::size_t(s.n) * s.c;
    std::vector<T> mid(planes * s.h * ow);
    std::vector<T> out(os.numel());
    const auto& xv = x.data();
    for (std::size_t p = 0; p < planes; ++p) {
        const T* src = xv.data() + p * s.h * s.w;
        T* m = mid.data() + p * s.h * ow;
        for (int y = 0; y < s.h; ++y)
            for (int o = 0; o < ow; ++o) {
                double acc = 0.0;
                for (int t = 0; t < 4; ++t)
                    acc += xtaps.w[o * 4 + t] * double(src[y * std::size_t(s.w) + xtaps.idx[o * 4 + t]]);
                m[y * std::size_t(ow) + o] = T(acc);
            }
        T* dst = out.data() + p * std::size_t(oh) * ow;
        for (int o = 0; o < oh; ++o)
            for (int xo = 0; xo < ow; ++xo) {
                double acc = 0.0;
                for (int t = 0; t < 4; ++t)
                    acc += ytaps.w[o * 4 + t] * double(m[std::size_t(ytaps.idx[o * 4 + t]) * ow + xo]);
                dst[o * std::size_t(ow) + xo] = T(acc);
            }
    }

    auto xn = x.node_;
    return detail::make_op<T>(
        "bicubic_resample", os, std::move(out), {x},
        [xn, s, os, ytaps, xtaps, planes](Node<T>& r) {
            // Transpose of the two linear passes, in reverse order.
            auto& gx = detail::grad_of(xn);
            std::vector<T> gmid(std::size_t(s.h) * os.w);
            for (std::size_t p = 0; p < planes; ++p) {
                std::fill(gmid.begin(), gmid.end(), T(0));
                const T* g = r.grad.data() + p * std::size_t(os.h) * os.w;
                for (int o = 0; o < os.h; ++o)
                    for (int xo = 0; xo < os.w; ++xo) {
                        const T gv = g[o * std::size_t(os.w) + xo];
                        for (int t = 0; t < 4; ++t)
                            gmid[std::size_t(ytaps.idx[o * 4 + t]) * os.w + xo] +=
                                T(ytaps.w[o * 4 + t]) * gv;
                    }
                T* dst = gx.data() + p * s.h * s.w;
                for (int y = 0; y < s.h; ++y)
                    for (int o = 0; o < os.w; ++o) {
                        const T gv = gmid[y * std::size_t(os.w) + o];
                        for (int t = 0; t < 4; ++t)
                            dst[y * std::size_t(s.w) + xtaps.idx[o * 4 + t]] +=
                                T(xtaps.w[o * 4 + t]) * gv;
                    }
            }
        });
}

// Border-replicating pad, forward only (inference on sizes that are not
// multiples of 32).
template <typename T>
Tensor<T> replicate_pad(const Tensor<T>& x, int top, int bottom, int left, int right) {
    const Shape s = x.shape();
    const Shape os(s.n, s.c, s.h + top + bottom, s.w + left + right);
    Tensor<T> out = Tensor<T>::zeros(os);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < os.h; ++y)
                for (int xo = 0; xo < os.w; ++xo) {
                    const int sy = std::clamp(y - top, 0, s.h - 1);
                    const int sx = std::clamp(xo - left, 0, s.w - 1);
                    out.data()[os.index(n, c, y, xo)] = x.data()[s.index(n, c, sy, sx)];
                }
    return out;
}

template <typename T>
Tensor<T> crop_spatial(const Tensor<T>& x, int y0, int x0, int h, int w) {
    const Shape s = x.shape();
    if (y0 < 0 || x0 < 0 || y0 + h > s.h || x0 + w > s.w)
        throw DimensionError("crop_spatial: window out of range");
    const Shape os(s.n, s.c, h, w);
    Tensor<T> out = Tensor<T>::zeros(os);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < h; ++y)
                for (int xo = 0; xo < w; ++xo)
                    out.data()[os.index(n, c, y, xo)] = x.data()[s.index(n, c, y0 + y, x0 + xo)];
    return out;
}

}  // namespace afnet
