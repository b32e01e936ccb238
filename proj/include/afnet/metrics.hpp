#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "afnet/fft.hpp"
#include "afnet/image.hpp"
#include "afnet/losses.hpp"
#include "afnet/ops.hpp"
#include "afnet/spectral.hpp"
#include "afnet/tensor.hpp"

namespace afnet {

// 10*log10(peak^2 / MSE); +inf for identical inputs.
template <typename T>
double psnr(const Tensor<T>& x, const Tensor<T>& y, double peak = 1.0) {
    if (x.shape() != y.shape()) throw DimensionError("psnr: shape mismatch");
    double mse = 0.0;
    const auto& xv = x.data();
    const auto& yv = y.data();
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double d = double(xv[i]) - double(yv[i]);
        mse += d * d;
    }
    mse /= double(xv.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

// Mean local SSIM; 3-channel inputs are converted to grayscale first.
template <typename T>
double ssim(const Tensor<T>& x, const Tensor<T>& y) {
    if (x.shape() != y.shape()) throw DimensionError("ssim: shape mismatch");
    NoGradGuard ng;
    Tensor<T> a = x, b = y;
    if (x.shape().c == 3) {
        a = grayscale(x);
        b = grayscale(y);
    }
    return double(scalar_value(ssim_index(a, b)));
}

template <typename T>
double ms_ssim_metric(const Tensor<T>& x, const Tensor<T>& y, int levels = 3) {
    NoGradGuard ng;
    return double(scalar_value(ms_ssim(x, y, levels)));
}

// Radially averaged log power spectral density.
struct PSDCurve {
    std::vector<double> frequency;  // normalized, 0 .. 0.5 cycles/pixel
    std::vector<double> log_power;  // mean log10(P + 1e-12) per bin

    std::size_t bins() const { return frequency.size(); }
};

// P = |centered spectrum|^2 / (H*W), binned by integer radius from the
// center; bin count = floor(min(H,W)/2).
template <typename T>
PSDCurve psd_curve(const Tensor<T>& img) {
    const Shape s = img.shape();
    if (s.n != 1) throw DimensionError("psd_curve: expected a single image");
    NoGradGuard ng;
    Tensor<T> gray = s.c == 3 ? grayscale(img) : img;
    const ComplexSpectrum spec = fftshift(fft2d(gray));
    const int h = s.h, w = s.w;
    const int nbins = std::min(h, w) / 2;
    if (nbins < 1) throw DimensionError("psd_curve: image too small");
    const int cy = h / 2, cx = w / 2;
    std::vector<double> sum(nbins, 0.0);
    std::vector<std::size_t> count(nbins, 0);
    const double norm = 1.0 / (double(h) * double(w));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dy = y - cy, dx = x - cx;
            const int bin = int(std::floor(std::sqrt(dy * dy + dx * dx) + 0.5));
            if (bin >= nbins) continue;
            const double p = std::norm(spec.at(y, x)) * norm;
            sum[bin] += std::log10(p + 1e-12);
            ++count[bin];
        }
    PSDCurve curve;
    curve.frequency.resize(nbins);
    curve.log_power.resize(nbins);
    for (int b = 0; b < nbins; ++b) {
        curve.frequency[b] = double(b) / double(std::min(h, w));
        curve.log_power[b] = count[b] ? sum[b] / double(count[b]) : -12.0;
    }
    return curve;
}

// Mean L1 distance between two PSD curves over a bin range.
inline double psd_distance(const PSDCurve& a, const PSDCurve& b, std::size_t from, std::size_t to) {
    if (a.bins() != b.bins() || from >= to || to > a.bins())
        throw DimensionError("psd_distance: incompatible curves or range");
    double acc = 0.0;
    for (std::size_t i = from; i < to; ++i) acc += std::abs(a.log_power[i] - b.log_power[i]);
    return acc / double(to - from);
}

// |delta normalized log-magnitude| and wrapped phase distance
// min(|dphi|, 2pi - |dphi|) / pi, per plane, from the spectrum features.
template <typename T>
struct FftDiff {
    Tensor<T> magnitude;  // N x P x H x W in [0,1]
    Tensor<T> phase;      // N x P x H x W in [0,1]
};

template <typename T>
FftDiff<T> fft_diff_heatmap(const Tensor<T>& a, const Tensor<T>& b,
                            SpectrumSource source = SpectrumSource::Gray) {
    if (a.shape() != b.shape()) throw DimensionError("fft_diff_heatmap: shape mismatch");
    NoGradGuard ng;
    auto [ma, pa] = fourier_features(a, source);
    auto [mb, pb] = fourier_features(b, source);
    FftDiff<T> out;
    out.magnitude = Tensor<T>::zeros(ma.shape());
    out.phase = Tensor<T>::zeros(pa.shape());
    for (std::size_t i = 0; i < ma.numel(); ++i) {
        out.magnitude.data()[i] = std::abs(ma.data()[i] - mb.data()[i]);
        // features hold atan2/pi, so |delta| is in units of pi already
        const double d = std::abs(double(pa.data()[i]) - double(pb.data()[i]));
        out.phase.data()[i] = T(std::min(d, 2.0 - d));
    }
    return out;
}

// Writes a [0,1] plane as an 8-bit blue-to-red heatmap (linear RGB
// interpolation between (0,0,255) and (255,0,0)).
template <typename T>
void save_heatmap(const Tensor<T>& plane, const std::string& path, int n = 0, int c = 0) {
    const Shape s = plane.shape();
    PngImage img;
    img.width = s.w;
    img.height = s.h;
    img.channels = 3;
    img.bit_depth = 8;
    img.pixels.resize(std::size_t(s.w) * s.h * 3);
    for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
            const double v = std::clamp(double(plane.at(n, c, y, x)), 0.0, 1.0);
            const std::size_t i = (std::size_t(y) * s.w + x) * 3;
            img.pixels[i + 0] = std::uint16_t(std::floor(v * 255.0 + 0.5));
            img.pixels[i + 1] = 0;
            img.pixels[i + 2] = std::uint16_t(std::floor((1.0 - v) * 255.0 + 0.5));
        }
    write_png(path, img);
}

}  // namespace afnet
