#pragma once

#include <functional>
#include <vector>

#include "afnet/ops.hpp"
#include "afnet/tensor.hpp"

namespace afnet {

// Finite-difference verification of the reverse-mode gradients. Meant for
// 64-bit tensors and small inputs (<= 16x16 spatial); the returned value
// is the max over elements and leaves of
//   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
//
// The function is re-evaluated from scratch for every probe, so it must
// be deterministic. The output is reduced with a fixed random projection
// to exercise the whole Jacobian.
inline double gradient_check(const std::function<Tensor<double>()>& forward,
                             const std::vector<Tensor<double>>& leaves,
                             std::uint64_t projection_seed = 7, double eps = 1e-4) {
    Tensor<double> out = forward();
    Rng proj(projection_seed);
    std::vector<double> r(out.numel());
    for (auto& v : r) v = proj.uniform(-1.0, 1.0);

    for (const auto& leaf : leaves) const_cast<Tensor<double>&>(leaf).zero_grad();
    out.backward(r);

    auto objective = [&]() {
        NoGradGuard ng;
        Tensor<double> y = forward();
        const auto& yv = y.data();
        double acc = 0.0;
        for (std::size_t i = 0; i < yv.size(); ++i) acc += r[i] * yv[i];
        return acc;
    };

    double worst = 0.0;
    for (const auto& leaf : leaves) {
        auto& data = const_cast<Tensor<double>&>(leaf).data();
        const auto& grad = const_cast<Tensor<double>&>(leaf).grad();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double orig = data[i];
            data[i] = orig + eps;
            const double fp = objective();
            data[i] = orig - eps;
            const double fm = objective();
            data[i] = orig;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double analytic = grad[i];
            const double denom = std::max(1e-8, std::abs(analytic) + std::abs(numeric));
            worst = std::max(worst, std::abs(analytic - numeric) / denom);
        }
    }
    return worst;
}

// Convenience overload: single input leaf, op applied to it.
inline double gradient_check(const std::function<Tensor<double>(const Tensor<double>&)>& op,
                             Tensor<double>& input, std::uint64_t projection_seed = 7,
                             double eps = 1e-4) {
    return gradient_check([&]() { return op(input); }, {input}, projection_seed, eps);
}

}  // namespace afnet
