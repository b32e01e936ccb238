#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "afnet/fft.hpp"
#include "afnet/ops.hpp"
#include "afnet/tensor.hpp"

namespace afnet {

enum class SpectrumSource { Gray, PerRgbChannel };

inline const char* to_string(SpectrumSource s) {
    return s == SpectrumSource::Gray ? "gray" : "per_rgb_channel";
}

namespace detail {

constexpr double kPi = 3.141592653589793238462643383279;

struct PlaneSpectrumState {
    ComplexSpectrum shifted;      // centered spectrum
    std::vector<double> logmag;   // log(1 + |F|)
    std::size_t jmin = 0, jmax = 0;
    double mmin = 0.0, mmax = 0.0;
};

inline PlaneSpectrumState analyze_plane(const std::vector<double>& plane, int h, int w) {
    PlaneSpectrumState st;
    st.shifted = fftshift(fft2d_plane(plane, h, w));
    st.logmag.resize(st.shifted.v.size());
    for (std::size_t i = 0; i < st.logmag.size(); ++i)
        st.logmag[i] = std::log1p(std::abs(st.shifted.v[i]));
    st.jmin = st.jmax = 0;
    st.mmin = st.mmax = st.logmag[0];
    for (std::size_t i = 1; i < st.logmag.size(); ++i) {
        if (st.logmag[i] < st.mmin) { st.mmin = st.logmag[i]; st.jmin = i; }
        if (st.logmag[i] > st.mmax) { st.mmax = st.logmag[i]; st.jmax = i; }
    }
    return st;
}

}  // namespace detail

// Centered spectrum features of every input plane, stacked as
// [normalized log-magnitudes | phases]: N x 2C x H x W.
//   magnitude = minmax-normalized log(1 + |F|), in [0, 1]
//   phase     = atan2(Im, Re) / pi, in [-1, 1]
// Differentiable with respect to the input planes; internals run in
// 64-bit regardless of T.
template <typename T>
Tensor<T> spectrum_features(const Tensor<T>& x) {
    const Shape s = x.shape();
    const std::size_t plane = std::size_t(s.h) * s.w;
    const int planes = s.n * s.c;
    const Shape os(s.n, 2 * s.c, s.h, s.w);
    std::vector<T> out(os.numel());

    auto states = std::make_shared<std::vector<detail::PlaneSpectrumState>>();
    states->reserve(planes);

    std::vector<double> buf(plane);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const T* src = x.data().data() + (std::size_t(n) * s.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) buf[i] = double(src[i]);
            auto st = detail::analyze_plane(buf, s.h, s.w);
            const double d = st.mmax - st.mmin;
            T* mdst = out.data() + (std::size_t(n) * 2 * s.c + c) * plane;
            T* pdst = out.data() + (std::size_t(n) * 2 * s.c + s.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                mdst[i] = d > 1e-12 ? T((st.logmag[i] - st.mmin) / d) : T(0);
                const auto z = st.shifted.v[i];
                pdst[i] = std::abs(z) > 0.0 ? T(std::atan2(z.imag(), z.real()) / detail::kPi)
                                            : T(0);
            }
            states->push_back(std::move(st));
        }

    auto xn = x.node_;
    return detail::make_op<T>(
        "spectrum_features", os, std::move(out), {x}, [xn, s, plane, states](Node<T>& r) {
            auto& gx = detail::grad_of(xn);
            ComplexSpectrum gf(s.h, s.w);
            for (int n = 0; n < s.n; ++n)
                for (int c = 0; c < s.c; ++c) {
                    const auto& st = (*states)[std::size_t(n) * s.c + c];
                    const T* gm = r.grad.data() + (std::size_t(n) * 2 * s.c + c) * plane;
                    const T* gp = r.grad.data() + (std::size_t(n) * 2 * s.c + s.c + c) * plane;
                    const double d = st.mmax - st.mmin;

                    // Min-max normalization: spread the gradient, then
                    // correct the argmin/argmax pivots.
                    std::vector<double> glm(plane, 0.0);
                    if (d > 1e-12) {
                        double sum_g = 0.0, sum_gm_norm = 0.0;
                        for (std::size_t i = 0; i < plane; ++i) {
                            const double g = double(gm[i]);
                            glm[i] = g / d;
                            sum_g += g;
                            sum_gm_norm += g * (st.logmag[i] - st.mmin) / d;
                        }
                        glm[st.jmin] += (-sum_g + sum_gm_norm) / d;
                        glm[st.jmax] -= sum_gm_norm / d;
                    }

                    // log1p + |.| + atan2 back to the complex spectrum.
                    for (std::size_t i = 0; i < plane; ++i) {
                        const auto z = st.shifted.v[i];
                        const double a = std::abs(z);
                        double gre = 0.0, gim = 0.0;
                        if (a > 1e-12) {
                            const double ga = glm[i] / (1.0 + a);
                            gre += ga * z.real() / a;
                            gim += ga * z.imag() / a;
                            const double gph = double(gp[i]) / (detail::kPi * a * a);
                            gre -= gph * z.imag();
                            gim += gph * z.real();
                        }
                        gf.v[i] = {gre, gim};
                    }

                    // Undo the shift, then pull back through the (linear)
                    // transform: unnormalized inverse, real part.
                    ComplexSpectrum gspec = ifftshift(gf);
                    ComplexSpectrum ginv = ifft2d_complex(gspec);
                    T* dst = gx.data() + (std::size_t(n) * s.c + c) * plane;
                    const double scale = double(s.h) * double(s.w);
                    for (std::size_t i = 0; i < plane; ++i)
                        dst[i] += T(ginv.v[i].real() * scale);
                }
        });
}

// (magnitude, phase) planes for an RGB image in [0,1], from either its
// grayscale version or each channel separately.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> fourier_features(const Tensor<T>& img, SpectrumSource source) {
    if (img.shape().c != 3) throw DimensionError("fourier_features: expected 3-channel image");
    const Tensor<T> planes = source == SpectrumSource::Gray ? grayscale(img) : img;
    const int p = planes.shape().c;
    Tensor<T> stacked = spectrum_features(planes);
    return {narrow_channels(stacked, 0, p), narrow_channels(stacked, p, p)};
}

}  // namespace afnet
