#include <gtest/gtest.h>

#include <filesystem>

#include "afnet/config.hpp"
#include "afnet/macs.hpp"
#include "afnet/metrics.hpp"

using namespace afnet;

TEST(Psnr, ClosedFormAndOracle) {
    auto x = Tensor<double>::filled(Shape(1, 3, 8, 8), 0.5);
    auto y = Tensor<double>::filled(Shape(1, 3, 8, 8), 0.6);
    EXPECT_NEAR(psnr(x, y), 20.0, 1e-6);  // MSE = 0.01
    EXPECT_TRUE(std::isinf(psnr(x, x)));

    Rng rng(1);
    auto a = Tensor<float>::uniform(Shape(2, 3, 6, 6), rng, 0.f, 1.f);
    auto b = Tensor<float>::uniform(Shape(2, 3, 6, 6), rng, 0.f, 1.f);
    double mse = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        mse += d * d;
    }
    mse /= double(a.numel());
    EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(1.0 / mse), 1e-6);
    EXPECT_DOUBLE_EQ(psnr(a, b), psnr(b, a));
    EXPECT_THROW(psnr(a, Tensor<float>::zeros(Shape(1, 1, 6, 6))), DimensionError);
}

TEST(Ssim, MetricContractAndSymmetry) {
    Rng rng(2);
    auto x = Tensor<float>::uniform(Shape(1, 3, 16, 16), rng, 0.f, 1.f);
    EXPECT_DOUBLE_EQ(ssim(x, x), 1.0);
    auto y = Tensor<float>::uniform(Shape(1, 3, 16, 16), rng, 0.f, 1.f);
    EXPECT_DOUBLE_EQ(ssim(x, y), ssim(y, x));
    auto neg = x.detach();
    for (auto& v : neg.data()) v = 1.f - v;
    EXPECT_LT(ssim(x, neg), 1.0);
}

TEST(Psd, ConstantImageIsDcOnly) {
    auto img = Tensor<float>::filled(Shape(1, 1, 32, 32), 0.4f);
    auto curve = psd_curve(img);
    ASSERT_EQ(curve.bins(), 16u);
    // DC identity: |F(0,0)|^2/(HW) = HW * mean^2
    EXPECT_NEAR(curve.log_power[0], std::log10(32.0 * 32.0 * 0.4 * 0.4 + 1e-12), 1e-6);
    for (std::size_t b = 1; b < curve.bins(); ++b)
        EXPECT_NEAR(curve.log_power[b], -12.0, 1e-6);  // the log floor
    EXPECT_DOUBLE_EQ(curve.frequency.back(), 15.0 / 32.0);
}

TEST(Psd, DcBinMatchesMeanIdentityOnRandomImages) {
    Rng rng(3);
    auto img = Tensor<float>::uniform(Shape(1, 3, 24, 24), rng, 0.f, 1.f);
    auto curve = psd_curve(img);
    NoGradGuard ng;
    auto gray = grayscale(img);
    double mean = 0.0;
    for (float v : gray.data()) mean += v;
    mean /= double(gray.numel());
    EXPECT_NEAR(curve.log_power[0], std::log10(24.0 * 24.0 * mean * mean + 1e-12), 1e-6);
}

TEST(Psd, WhiteNoiseCurveIsFlat) {
    // averaged over 10 seeds, the mid-band slope stays small
    const int size = 64;
    std::vector<double> mean_power(size / 2, 0.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        auto img = Tensor<float>::uniform(Shape(1, 1, size, size), rng, 0.f, 1.f);
        auto curve = psd_curve(img);
        for (std::size_t b = 0; b < curve.bins(); ++b) mean_power[b] += curve.log_power[b] / 10.0;
    }
    // least-squares slope of log power vs normalized frequency, mid bins
    const std::size_t from = size / 8, to = 3 * size / 8;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(to - from);
    for (std::size_t b = from; b < to; ++b) {
        const double fx = double(b) / size;
        sx += fx;
        sy += mean_power[b];
        sxx += fx * fx;
        sxy += fx * mean_power[b];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    EXPECT_LT(std::abs(slope), 0.5);
}

TEST(Psd, SingleCosinePeaksAtItsRadius) {
    const int size = 32, cycles = 5;
    auto img = Tensor<float>::zeros(Shape(1, 1, size, size));
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            img.at(0, 0, y, x) = float(0.5 + 0.5 * std::cos(2.0 * M_PI * cycles * x / size));
    auto curve = psd_curve(img);
    std::size_t argmax = 1;
    for (std::size_t b = 1; b < curve.bins(); ++b)
        if (curve.log_power[b] > curve.log_power[argmax]) argmax = b;
    EXPECT_EQ(argmax, std::size_t(cycles));
}

TEST(FftDiff, IdenticalImagesGiveZeroPlanes) {
    Rng rng(4);
    auto a = Tensor<float>::uniform(Shape(1, 3, 16, 16), rng, 0.f, 1.f);
    auto diff = fft_diff_heatmap(a, a.detach());
    for (float v : diff.magnitude.data()) EXPECT_FLOAT_EQ(v, 0.f);
    for (float v : diff.phase.data()) EXPECT_FLOAT_EQ(v, 0.f);
}

TEST(FftDiff, PhaseBoundedAndShiftTheorem) {
    Rng rng(5);
    auto a = Tensor<float>::uniform(Shape(1, 3, 16, 16), rng, 0.f, 1.f);
    // circular shift: same magnitudes, different phases
    auto b = Tensor<float>::zeros(a.shape());
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) b.at(0, c, y, (x + 3) % 16) = a.at(0, c, y, x);
    auto diff = fft_diff_heatmap(a, b);
    double mag_max = 0.0, phase_sum = 0.0;
    for (float v : diff.magnitude.data()) mag_max = std::max(mag_max, double(v));
    for (float v : diff.phase.data()) {
        EXPECT_GE(v, 0.f);
        EXPECT_LE(v, 1.f);
        phase_sum += v;
    }
    EXPECT_LT(mag_max, 1e-4);
    EXPECT_GT(phase_sum / double(diff.phase.numel()), 0.05);
}

TEST(Heatmap, ColormapEndpoints) {
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "afnet_heatmap").string();
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto plane = Tensor<float>::from_data(Shape(1, 1, 1, 2), {0.f, 1.f});
    save_heatmap(plane, dir + "/h.png");
    auto img = read_png(dir + "/h.png");
    ASSERT_EQ(img.channels, 3);
    // blue at 0, red at 1
    EXPECT_EQ(img.pixels[0], 0);
    EXPECT_EQ(img.pixels[2], 255);
    EXPECT_EQ(img.pixels[3], 255);
    EXPECT_EQ(img.pixels[5], 0);
}

TEST(Macs, HandComputedReferenceCounts) {
    // 3->8 channels, K=3, 64x64 output, stride 1
    EXPECT_EQ(conv_macs(3, 3, 8, 1, 64, 64), 884736u);
    // 1x1 conv, 1->1 channel, on a 1x1 image
    EXPECT_EQ(conv_macs(1, 1, 1, 1, 1, 1), 1u);
    // depthwise (groups == Cin): Cin * K^2 * Hout * Wout
    EXPECT_EQ(conv_macs(3, 4, 4, 4, 5, 7), 4u * 9u * 35u);
    EXPECT_EQ(fc_macs(128, 10), 1280u);
}

TEST(Macs, ReportTotalsAreAdditiveAndValueInvariant) {
    RunConfig cfg;
    cfg.base_channels = 8;
    cfg.rdb_count = 2;
    auto report = count_macs(cfg.generator_config(), 64, 64);
    std::uint64_t manual = 0;
    for (const auto& [name, m] : report.layers) manual += m;
    EXPECT_EQ(report.total(), manual);
    EXPECT_GT(report.layers.size(), 10u);

    // independent of parameter values: the builder never initializes, and
    // a trained model reports the same trace
    Generator<float> g(cfg.generator_config());
    Rng rng(3);
    g.init(rng);
    EXPECT_EQ(g.macs(64, 64), report.total());
}

TEST(Macs, AblationLadderOrderingMatchesTable) {
    RunConfig base;
    auto gmacs = [&](bool single, int rdb, bool cmsfe) {
        RunConfig c = base;
        c.single_stage = single;
        c.rdb_count = rdb;
        c.use_cmsfe_a = cmsfe;
        return count_macs(c.generator_config(), 256, 256).total();
    };
    const std::uint64_t single = gmacs(true, 1, false);
    const std::uint64_t rdb1 = gmacs(false, 1, false);
    const std::uint64_t rdb3 = gmacs(false, 3, false);
    const std::uint64_t rdb5 = gmacs(false, 5, false);
    const std::uint64_t rdb7 = gmacs(false, 7, false);
    const std::uint64_t cmsfe = gmacs(false, 7, true);
    EXPECT_LT(single, rdb1);
    EXPECT_LT(rdb1, rdb3);
    EXPECT_LT(rdb3, rdb5);
    EXPECT_LT(rdb5, rdb7);
    EXPECT_LT(rdb7, cmsfe);
    // adversarial rows leave inference cost untouched: critics are
    // training-only and excluded from the generator report
    RunConfig gan = base;
    gan.use_patch_gan = gan.use_fourier_gan = true;
    RunConfig nogan = base;
    nogan.use_patch_gan = nogan.use_fourier_gan = false;
    EXPECT_EQ(count_macs(gan.generator_config(), 256, 256).total(),
              count_macs(nogan.generator_config(), 256, 256).total());
}

TEST(Macs, DiscriminatorReports) {
    PatchDiscConfig pc{64, 4};
    auto pr = count_macs(pc, 256, 256);
    EXPECT_GT(pr.total(), 0u);
    FourierDiscConfig fsc;
    auto fr = count_macs(fsc, 256, 256);
    EXPECT_GT(fr.total(), pr.total());  // wider input (5 channels vs 3)
}

TEST(Macs, ReportTextMentionsTotal) {
    RunConfig cfg;
    cfg.base_channels = 8;
    cfg.rdb_count = 1;
    auto report = count_macs(cfg.generator_config(), 64, 64);
    const std::string text = report.text();
    EXPECT_NE(text.find("total"), std::string::npos);
    EXPECT_NE(text.find("GMACs"), std::string::npos);
    EXPECT_NE(text.find(std::to_string(report.total())), std::string::npos);
}
