#pragma once

#include <array>
#include <optional>
#include <vector>

#include "afnet/conv.hpp"
#include "afnet/ops.hpp"
#include "afnet/tensor.hpp"

namespace afnet {

// Balancing coefficients of the five-term objective.
struct LossWeights {
    double l1 = 1.0;
    double ms_ssim = 1.0;
    double scal = 0.01;
    double p_adv = 0.5;
    double f_adv = 0.5;

    void validate() const {
        for (double w : {l1, ms_ssim, scal, p_adv, f_adv})
            if (w < 0.0) throw ParameterError("loss weights must be >= 0");
    }
};

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    return reduce_mean(abs_op(sub(pred, target)));
}

namespace detail {

// Normalized 11x11 Gaussian (sigma 1.5) replicated per channel for a
// depthwise valid convolution. Fixed, not a learnable parameter.
template <typename T>
Tensor<T> gaussian_window(int channels, int size = 11, double sigma = 1.5) {
    std::vector<double> k1(size);
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - (size - 1) / 2.0;
        k1[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k1[i];
    }
    for (auto& v : k1) v /= sum;
    Tensor<T> w = Tensor<T>::zeros(Shape(channels, 1, size, size));
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) w.at(c, 0, y, x) = T(k1[y] * k1[x]);
    return w;
}

template <typename T>
struct SsimParts {
    Tensor<T> luminance_mean;  // mean of l * cs over windows
    Tensor<T> contrast_mean;   // mean of cs over windows
};

// Windowed SSIM statistics: 11x11 Gaussian, K1=0.01, K2=0.03, peak 1.
template <typename T>
SsimParts<T> ssim_parts(const Tensor<T>& x, const Tensor<T>& y) {
    if (x.shape() != y.shape()) throw DimensionError("ssim: shape mismatch");
    if (std::min(x.shape().h, x.shape().w) < 11)
        throw ParameterError("ssim: image smaller than the 11x11 window");
    const int c = x.shape().c;
    const Tensor<T> win = gaussian_window<T>(c);
    const Tensor<T> none;
    auto blur = [&](const Tensor<T>& t) { return conv2d(t, win, none, 1, 0, c); };

    const T c1 = T(0.01 * 0.01), c2 = T(0.03 * 0.03);
    Tensor<T> mx = blur(x), my = blur(y);
    Tensor<T> mx2 = square(mx), my2 = square(my), mxy = mul(mx, my);
    Tensor<T> sx = sub(blur(square(x)), mx2);
    Tensor<T> sy = sub(blur(square(y)), my2);
    Tensor<T> sxy = sub(blur(mul(x, y)), mxy);

    Tensor<T> cs = div(add_scalar(mul_scalar(sxy, T(2)), c2), add_scalar(add(sx, sy), c2));
    Tensor<T> l = div(add_scalar(mul_scalar(mxy, T(2)), c1), add_scalar(add(mx2, my2), c1));
    return {reduce_mean(mul(l, cs)), reduce_mean(cs)};
}

inline std::vector<double> msssim_weights(int levels) {
    static const double kFull[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    if (levels < 1 || levels > 5) throw ParameterError("ms_ssim: levels must be in [1,5]");
    std::vector<double> w(kFull, kFull + levels);
    double sum = 0.0;
    for (double v : w) sum += v;
    for (auto& v : w) v /= sum;
    return w;
}

// max(x, floor) with pass-through gradient above the floor; keeps the
// per-level exponents defined if a contrast term dips negative.
template <typename T>
Tensor<T> clamp_min(const Tensor<T>& x, T floor) {
    return unary_op<T>(
        "clamp_min", x, [floor](T v) { return v > floor ? v : floor; },
        [floor](T v, T) { return v > floor ? T(1) : T(0); });
}

}  // namespace detail

// Mean single-scale SSIM index as a scalar graph tensor.
template <typename T>
Tensor<T> ssim_index(const Tensor<T>& x, const Tensor<T>& y) {
    return detail::ssim_parts(x, y).luminance_mean;
}

// Multi-scale SSIM: contrast terms at every level, luminance folded into
// the last, dyadic downsampling in between, exponent weights truncated and
// renormalized below 5 levels.
template <typename T>
Tensor<T> ms_ssim(const Tensor<T>& pred, const Tensor<T>& target, int levels = 3) {
    const auto weights = detail::msssim_weights(levels);
    if (std::min(pred.shape().h, pred.shape().w) < 11 * (1 << (levels - 1)))
        throw ParameterError("ms_ssim: image too small for " + std::to_string(levels) +
                             " levels");
    Tensor<T> x = pred, y = target;
    Tensor<T> result;
    for (int l = 0; l < levels; ++l) {
        auto parts = detail::ssim_parts(x, y);
        Tensor<T> term = (l == levels - 1) ? parts.luminance_mean : parts.contrast_mean;
        Tensor<T> factor = pow_const(detail::clamp_min(term, T(1e-6)), T(weights[l]));
        result = (l == 0) ? factor : mul(result, factor);
        if (l + 1 < levels) {
            x = avg_pool2(x);
            y = avg_pool2(y);
        }
    }
    return result;
}

template <typename T>
Tensor<T> ms_ssim_loss(const Tensor<T>& pred, const Tensor<T>& target, int levels = 3) {
    return add_scalar(mul_scalar(ms_ssim(pred, target, levels), T(-1)), T(1));
}

// Cosine similarity between pooled feature vectors (N x C x 1 x 1),
// epsilon-guarded against zero norms.
template <typename T>
Tensor<T> cosine_similarity(const Tensor<T>& a, const Tensor<T>& b, T eps = T(1e-8)) {
    Tensor<T> na = sqrt_op(add_scalar(dot_channels(a, a), eps * eps));
    Tensor<T> nb = sqrt_op(add_scalar(dot_channels(b, b), eps * eps));
    return div(dot_channels(a, b), add_scalar(mul(na, nb), eps));
}

// Supervised contrastive term over critic features:
//   -log[ exp(cos(a,p)/tau) / (exp(cos(a,p)/tau) + exp(cos(a,n)/tau)) ]
// = softplus((cos(a,n) - cos(a,p)) / tau), averaged over the batch.
// Anchor = enhanced output, positive = ground truth, negative = input.
template <typename T>
Tensor<T> scal_loss(const Tensor<T>& anchor, const Tensor<T>& positive, const Tensor<T>& negative,
                    T tau = T(0.5)) {
    Tensor<T> cp = cosine_similarity(anchor, positive);
    Tensor<T> cn = cosine_similarity(anchor, negative);
    return reduce_mean(softplus(mul_scalar(sub(cn, cp), T(1) / tau)));
}

// Least-squares adversarial losses on raw score maps.
template <typename T>
Tensor<T> lsgan_d_loss(const Tensor<T>& real_scores, const Tensor<T>& fake_scores) {
    Tensor<T> real_term = reduce_mean(square(add_scalar(real_scores, T(-1))));
    Tensor<T> fake_term = reduce_mean(square(fake_scores));
    return mul_scalar(add(real_term, fake_term), T(0.5));
}

template <typename T>
Tensor<T> lsgan_g_loss(const Tensor<T>& fake_scores) {
    return mul_scalar(reduce_mean(square(add_scalar(fake_scores, T(-1)))), T(0.5));
}

// Every term of one generator update, unweighted and weighted, plus the
// combined graph tensor driving the backward pass.
template <typename T>
struct LossBreakdown {
    double l1 = 0, ms_ssim = 0, scal = 0, p_adv = 0, f_adv = 0;  // unweighted
    double weighted_l1 = 0, weighted_ms_ssim = 0, weighted_scal = 0, weighted_p_adv = 0,
           weighted_f_adv = 0;
    double total = 0;
    Tensor<T> graph;
};

template <typename T>
struct GeneratorLossInputs {
    Tensor<T> pred;    // final enhanced output
    Tensor<T> target;  // ground truth
    std::optional<Tensor<T>> patch_fake_scores;    // D1(pred)
    std::optional<Tensor<T>> fourier_fake_scores;  // D2(pred)
    // critic features for (pred, target, input), pooled to N x C x 1 x 1
    std::optional<std::array<Tensor<T>, 3>> scal_features;
};

// Weighted sum of the enabled terms. A zero weight skips the term
// entirely, so the remaining gradients match a build without it.
template <typename T>
LossBreakdown<T> total_generator_loss(const GeneratorLossInputs<T>& in, const LossWeights& w,
                                      int msssim_levels = 3, T scal_tau = T(0.5)) {
    w.validate();
    LossBreakdown<T> out;
    Tensor<T> total = Tensor<T>::zeros(Shape(1, 1, 1, 1));

    auto accumulate = [&](Tensor<T> term, double weight, double& raw, double& weighted) {
        raw = double(scalar_value(term));
        weighted = weight * raw;
        total = add(total, mul_scalar(term, T(weight)));
    };

    if (w.l1 > 0.0)
        accumulate(l1_loss(in.pred, in.target), w.l1, out.l1, out.weighted_l1);
    if (w.ms_ssim > 0.0)
        accumulate(ms_ssim_loss(in.pred, in.target, msssim_levels), w.ms_ssim, out.ms_ssim,
                   out.weighted_ms_ssim);
    if (w.scal > 0.0) {
        if (!in.scal_features) throw ParameterError("scal weight > 0 but no critic features given");
        const auto& f = *in.scal_features;
        accumulate(scal_loss(f[0], f[1], f[2], scal_tau), w.scal, out.scal, out.weighted_scal);
    }
    if (w.p_adv > 0.0) {
        if (!in.patch_fake_scores) throw ParameterError("p_adv weight > 0 but no patch scores given");
        accumulate(lsgan_g_loss(*in.patch_fake_scores), w.p_adv, out.p_adv, out.weighted_p_adv);
    }
    if (w.f_adv > 0.0) {
        if (!in.fourier_fake_scores)
            throw ParameterError("f_adv weight > 0 but no fourier scores given");
        accumulate(lsgan_g_loss(*in.fourier_fake_scores), w.f_adv, out.f_adv, out.weighted_f_adv);
    }

    out.total = double(scalar_value(total));
    out.graph = total;
    return out;
}

}  // namespace afnet
