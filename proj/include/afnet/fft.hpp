#pragma once

#include <complex>
#include <vector>

#include "afnet/tensor.hpp"

namespace afnet {

// 2-D spectrum of one image plane. Always 64-bit: Parseval-grade
// tolerances are not reachable in float.
struct ComplexSpectrum {
    int h = 0, w = 0;
    std::vector<std::complex<double>> v;  // row-major

    ComplexSpectrum() = default;
    ComplexSpectrum(int h_, int w_) : h(h_), w(w_), v(std::size_t(h_) * w_) {}
    std::complex<double>& at(int y, int x) { return v[std::size_t(y) * w + x]; }
    const std::complex<double>& at(int y, int x) const { return v[std::size_t(y) * w + x]; }
};

namespace detail {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline bool is_pow2(std::size_t n) { return n && (n & (n - 1)) == 0; }

// In-place iterative radix-2, unnormalized; sign = -1 forward, +1 inverse.
inline void fft_pow2(std::vector<std::complex<double>>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * kTwoPi / double(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const auto u = a[i + j];
                const auto v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Bluestein's chirp-z for arbitrary length, via a pow-2 convolution.
inline void fft_bluestein(std::vector<std::complex<double>>& a, int sign) {
    const std::size_t n = a.size();
    std::size_t m = 1;
    while (m < 2 * n + 1) m <<= 1;
    std::vector<std::complex<double>> chirp(n);
    for (std::size_t i = 0; i < n; ++i) {
        // i^2 mod 2n keeps the angle argument small for large n
        const std::size_t sq = (i * i) % (2 * n);
        const double ang = sign * kTwoPi * double(sq) / (2.0 * double(n));
        chirp[i] = {std::cos(ang), std::sin(ang)};
    }
    std::vector<std::complex<double>> x(m, {0.0, 0.0}), y(m, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) x[i] = a[i] * chirp[i];
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = std::conj(chirp[i]);
        if (i) y[m - i] = std::conj(chirp[i]);
    }
    fft_pow2(x, -1);
    fft_pow2(y, -1);
    for (std::size_t i = 0; i < m; ++i) x[i] *= y[i];
    fft_pow2(x, +1);
    for (std::size_t i = 0; i < n; ++i) a[i] = x[i] * chirp[i] / double(m);
}

inline void fft_1d(std::vector<std::complex<double>>& a, int sign) {
    if (a.size() <= 1) return;
    if (is_pow2(a.size()))
        fft_pow2(a, sign);
    else
        fft_bluestein(a, sign);
}

inline void fft2d_inplace(ComplexSpectrum& s, int sign) {
    std::vector<std::complex<double>> line(std::max(s.h, s.w));
    for (int y = 0; y < s.h; ++y) {
        line.assign(s.v.begin() + std::size_t(y) * s.w, s.v.begin() + std::size_t(y + 1) * s.w);
        fft_1d(line, sign);
        std::copy(line.begin(), line.end(), s.v.begin() + std::size_t(y) * s.w);
    }
    for (int x = 0; x < s.w; ++x) {
        line.resize(s.h);
        for (int y = 0; y < s.h; ++y) line[y] = s.at(y, x);
        fft_1d(line, sign);
        for (int y = 0; y < s.h; ++y) s.at(y, x) = line[y];
    }
}

}  // namespace detail

// Unnormalized forward transform of an H x W real plane.
inline ComplexSpectrum fft2d_plane(const std::vector<double>& plane, int h, int w) {
    if (plane.size() != std::size_t(h) * w) throw DimensionError("fft2d: plane size mismatch");
    ComplexSpectrum s(h, w);
    for (std::size_t i = 0; i < plane.size(); ++i) s.v[i] = {plane[i], 0.0};
    detail::fft2d_inplace(s, -1);
    return s;
}

// Inverse transform divided by H*W; the (numerically ~zero for Hermitian
// input) imaginary part is discarded.
inline std::vector<double> ifft2d_plane(const ComplexSpectrum& spec) {
    ComplexSpectrum s = spec;
    detail::fft2d_inplace(s, +1);
    const double inv = 1.0 / (double(s.h) * double(s.w));
    std::vector<double> out(s.v.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.v[i].real() * inv;
    return out;
}

inline ComplexSpectrum ifft2d_complex(const ComplexSpectrum& spec) {
    ComplexSpectrum s = spec;
    detail::fft2d_inplace(s, +1);
    const double inv = 1.0 / (double(s.h) * double(s.w));
    for (auto& z : s.v) z *= inv;
    return s;
}

// Single-channel Tensor plane -> spectrum (values widened to 64-bit).
template <typename T>
ComplexSpectrum fft2d(const Tensor<T>& plane, int n = 0, int c = 0) {
    const Shape s = plane.shape();
    std::vector<double> buf(std::size_t(s.h) * s.w);
    for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) buf[std::size_t(y) * s.w + x] = double(plane.at(n, c, y, x));
    return fft2d_plane(buf, s.h, s.w);
}

// Moves DC to (floor(H/2), floor(W/2)).
inline ComplexSpectrum fftshift(const ComplexSpectrum& s) {
    ComplexSpectrum out(s.h, s.w);
    const int dy = s.h / 2, dx = s.w / 2;
    for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) out.at((y + dy) % s.h, (x + dx) % s.w) = s.at(y, x);
    return out;
}

// Exact inverse of fftshift (differs from it on odd dimensions).
inline ComplexSpectrum ifftshift(const ComplexSpectrum& s) {
    ComplexSpectrum out(s.h, s.w);
    const int dy = s.h / 2, dx = s.w / 2;
    for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) out.at(y, x) = s.at((y + dy) % s.h, (x + dx) % s.w);
    return out;
}

}  // namespace afnet
