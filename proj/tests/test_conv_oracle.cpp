#include <gtest/gtest.h>

#include "afnet/conv.hpp"
#include "afnet/gradcheck.hpp"

using namespace afnet;

namespace {

// Direct quadruple-loop cross-correlation, independent of the im2col path.
template <typename T>
Tensor<T> conv_reference(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                         int pad, int groups) {
    const Shape xs = x.shape(), ws = w.shape();
    const int k = ws.h;
    const int oh = conv_out_dim(xs.h, k, stride, pad);
    const int ow = conv_out_dim(xs.w, k, stride, pad);
    const int cg = xs.c / groups, og = ws.n / groups;
    Tensor<T> out = Tensor<T>::zeros(Shape(xs.n, ws.n, oh, ow));
    for (int n = 0; n < xs.n; ++n)
        for (int oc = 0; oc < ws.n; ++oc) {
            const int g = oc / og;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = b.defined() ? double(b.data()[oc]) : 0.0;
                    for (int ic = 0; ic < cg; ++ic)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int iy = oy * stride - pad + ky;
                                const int ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                                acc += double(x.at(n, g * cg + ic, iy, ix)) *
                                       double(w.at(oc, ic, ky, kx));
                            }
                    out.at(n, oc, oy, ox) = T(acc);
                }
        }
    return out;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    EXPECT_EQ(a.shape(), b.shape());
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(double(a.data()[i]) - double(b.data()[i])));
    return m;
}

}  // namespace

TEST(Conv2d, IdentityOneByOneKernel) {
    Rng rng(1);
    auto x = Tensor<float>::uniform(Shape(2, 1, 5, 6), rng, -1.f, 1.f);
    auto w = Tensor<float>::filled(Shape(1, 1, 1, 1), 1.f);
    auto b = Tensor<float>::zeros(Shape(1, 1, 1, 1));
    auto y = conv2d(x, w, b, 1, 0, 1);
    EXPECT_EQ(y.data(), x.data());
}

TEST(Conv2d, OverlapCountingOnOnes) {
    auto x = Tensor<float>::filled(Shape(1, 1, 4, 4), 1.f);
    auto w = Tensor<float>::filled(Shape(1, 1, 3, 3), 1.f);
    auto y = conv2d(x, w, Tensor<float>(), 1, 1, 1);
    ASSERT_EQ(y.shape(), Shape(1, 1, 4, 4));
    EXPECT_FLOAT_EQ(y.at(0, 0, 0, 0), 4.f);  // corner
    EXPECT_FLOAT_EQ(y.at(0, 0, 0, 1), 6.f);  // edge
    EXPECT_FLOAT_EQ(y.at(0, 0, 1, 1), 9.f);  // interior
    EXPECT_FLOAT_EQ(y.at(0, 0, 3, 3), 4.f);
}

TEST(Conv2d, MatchesDirectSummationOracle) {
    struct Case {
        int n, cin, h, w, cout, k, stride, pad, groups;
    };
    const Case cases[] = {
        {2, 3, 8, 8, 4, 3, 2, 0, 1},   // strided
        {1, 4, 7, 9, 6, 3, 1, 1, 2},   // grouped, padded
        {2, 2, 6, 6, 2, 5, 1, 2, 1},   // large kernel
        {1, 8, 5, 5, 8, 3, 1, 1, 8},   // depthwise
        {1, 3, 9, 7, 5, 1, 2, 0, 1},   // pointwise strided
    };
    for (const auto& c : cases) {
        Rng rng(c.cin * 100 + c.k);
        auto x = Tensor<float>::uniform(Shape(c.n, c.cin, c.h, c.w), rng, -1.f, 1.f);
        auto w = Tensor<float>::uniform(Shape(c.cout, c.cin / c.groups, c.k, c.k), rng, -1.f, 1.f);
        auto b = Tensor<float>::uniform(Shape(1, c.cout, 1, 1), rng, -0.5f, 0.5f);
        auto got = conv2d(x, w, b, c.stride, c.pad, c.groups);
        auto want = conv_reference(x, w, b, c.stride, c.pad, c.groups);
        EXPECT_LT(max_abs_diff(got, want), 1e-5)
            << "k=" << c.k << " stride=" << c.stride << " groups=" << c.groups;
    }
}

TEST(Conv2d, ErrorCases) {
    auto x = Tensor<float>::zeros(Shape(1, 3, 4, 4));
    auto w = Tensor<float>::zeros(Shape(2, 3, 3, 3));
    EXPECT_THROW(conv2d(x, w, Tensor<float>(), 1, 0, 2), DimensionError);  // 3 % 2 != 0
    EXPECT_THROW(conv2d(x, w, Tensor<float>(), 0, 0, 1), ParameterError);
    EXPECT_THROW(conv2d(x, w, Tensor<float>(), 1, -1, 1), ParameterError);
    auto wrong_w = Tensor<float>::zeros(Shape(2, 2, 3, 3));
    EXPECT_THROW(conv2d(x, wrong_w, Tensor<float>(), 1, 0, 1), DimensionError);

    CheckedModeGuard on(true);
    auto bad_w = Tensor<float>::filled(Shape(1, 3, 1, 1), std::numeric_limits<float>::quiet_NaN());
    EXPECT_THROW(conv2d(x, bad_w, Tensor<float>(), 1, 0, 1), NumericError);
}

TEST(Conv2d, LinearGradCheckIsNearExact) {
    // gradient wrt input of a fixed-weight conv is exact up to roundoff
    Rng rng(42);
    auto x = Tensor<double>::uniform(Shape(1, 2, 6, 6), rng, -1.0, 1.0, true);
    auto w = Tensor<double>::uniform(Shape(3, 2, 3, 3), rng, -1.0, 1.0, false);
    auto err = gradient_check([&] { return conv2d(x, w, Tensor<double>(), 1, 1, 1); }, {x});
    EXPECT_LT(err, 1e-6);
}

TEST(Conv2d, GradChecksAcrossSeeds) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        auto x = Tensor<double>::uniform(Shape(2, 4, 6, 6), rng, -1.0, 1.0, true);
        auto w = Tensor<double>::uniform(Shape(4, 2, 3, 3), rng, -0.7, 0.7, true);
        auto b = Tensor<double>::uniform(Shape(1, 4, 1, 1), rng, -0.2, 0.2, true);
        const double err = gradient_check(
            [&] { return conv2d(x, w, b, 2, 1, 2); }, {x, w, b}, seed + 3);
        EXPECT_LT(err, 1e-3) << "seed " << seed;
    }
}
