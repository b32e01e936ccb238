#pragma once

#include <cstdio>
#include <string>

#include "afnet/discriminator.hpp"
#include "afnet/generator.hpp"

namespace afnet {

// Per-layer MAC accounting at a stated input resolution. Activations,
// pooling, resampling and FFTs count as zero under the multiply-accumulate
// convention.
struct MacReport {
    int input_h = 0, input_w = 0, input_c = 0;
    MacEntries layers;

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (const auto& [name, m] : layers) t += m;
        return t;
    }

    double gmacs() const { return double(total()) / 1e9; }

    std::string text() const {
        std::string out = "input " + std::to_string(input_c) + "x" + std::to_string(input_h) +
                          "x" + std::to_string(input_w) + "\n";
        char buf[160];
        for (const auto& [name, m] : layers) {
            std::snprintf(buf, sizeof(buf), "%-48s %14llu\n", name.c_str(),
                          (unsigned long long)m);
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), "%-48s %14llu  (%.4f GMACs)\n", "total",
                      (unsigned long long)total(), gmacs());
        out += buf;
        return out;
    }
};

// Inference cost of a generator configuration. Training-only critics are
// excluded from this headline figure.
inline MacReport count_macs(const GeneratorConfig& cfg, int h, int w) {
    Generator<float> g(cfg);  // parameters stay uninitialized; only shapes matter
    MacReport report;
    report.input_h = h;
    report.input_w = w;
    report.input_c = channels_for(cfg.input_mode);
    g.collect_macs(h, w, report.layers);
    return report;
}

inline MacReport count_macs(const PatchDiscConfig& cfg, int h, int w) {
    PatchDiscriminator<float> d(cfg);
    MacReport report;
    report.input_h = h;
    report.input_w = w;
    report.input_c = 3;
    d.critic.collect_macs("patch_disc", h, w, report.layers);
    return report;
}

inline MacReport count_macs(const FourierDiscConfig& cfg, int h, int w) {
    FourierDiscriminator<float> d(cfg);
    MacReport report;
    report.input_h = h;
    report.input_w = w;
    report.input_c = cfg.input_channels();
    d.critic.collect_macs("fourier_disc", h, w, report.layers);
    return report;
}

}  // namespace afnet
