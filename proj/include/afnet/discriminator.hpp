#pragma once

#include <string>
#include <vector>

#include "afnet/conv.hpp"
#include "afnet/generator.hpp"
#include "afnet/ops.hpp"
#include "afnet/spectral.hpp"
#include "afnet/tensor.hpp"

namespace afnet {

struct PatchDiscConfig {
    int base_width = 64;
    int stride2_layers = 4;
};

struct FourierDiscConfig {
    SpectrumSource spectrum_source = SpectrumSource::Gray;
    int base_width = 64;
    int stride2_layers = 4;

    int input_channels() const {
        return 3 + 2 * (spectrum_source == SpectrumSource::Gray ? 1 : 3);
    }
};

// Shared critic body: a stack of stride-2 3x3 convs with leaky-relu,
// widths doubling up to 8x base, and a stride-1 scoring conv. Raw scores,
// no squashing (least-squares objective). No normalization layers.
template <typename T>
struct ConvCritic {
    int in_channels = 0;
    std::vector<Conv2d<T>> body;
    Conv2d<T> head;

    ConvCritic() = default;
    ConvCritic(int in_ch, int base_width, int stride2_layers) : in_channels(in_ch) {
        int prev = in_ch;
        for (int i = 0; i < stride2_layers; ++i) {
            const int width = base_width * std::min(8, 1 << i);
            body.emplace_back(prev, width, 3, 2, 1);
            prev = width;
        }
        head = Conv2d<T>(prev, 1, 3, 1, 1);
    }

    void init(Rng& rng) {
        for (auto& c : body) c.init(rng);
        head.init(rng);
    }

    struct Output {
        Tensor<T> scores;    // N x 1 x H' x W'
        Tensor<T> features;  // penultimate activations pooled to N x C x 1 x 1
    };

    Output forward(const Tensor<T>& x) const {
        if (x.shape().c != in_channels)
            throw DimensionError("critic: expected " + std::to_string(in_channels) +
                                 " input channels, got " + std::to_string(x.shape().c));
        Tensor<T> f = x;
        for (const auto& c : body) f = leaky_relu(c.forward(f), T(0.2));
        return {head.forward(f), global_avg_pool(f)};
    }

    Tensor<T> scores(const Tensor<T>& x) const { return forward(x).scores; }

    void collect_macs(const std::string& p, int h, int w, MacEntries& out) const {
        for (std::size_t i = 0; i < body.size(); ++i) {
            body[i].collect_macs(p + ".conv" + std::to_string(i), h, w, out);
            h = body[i].out_dim(h);
            w = body[i].out_dim(w);
        }
        head.collect_macs(p + ".head", h, w, out);
    }

    std::uint64_t macs(int h, int w) const {
        MacEntries entries;
        collect_macs("critic", h, w, entries);
        std::uint64_t total = 0;
        for (const auto& [name, m] : entries) total += m;
        return total;
    }

    void collect_params(const std::string& p, NamedParams<T>& out) const {
        for (std::size_t i = 0; i < body.size(); ++i)
            body[i].collect_params(p + ".conv" + std::to_string(i), out);
        head.collect_params(p + ".head", out);
    }
};

// Textural critic (D1): patch scores over the image alone.
template <typename T>
struct PatchDiscriminator {
    PatchDiscConfig cfg;
    ConvCritic<T> critic;

    PatchDiscriminator() = default;
    explicit PatchDiscriminator(const PatchDiscConfig& c)
        : cfg(c), critic(3, c.base_width, c.stride2_layers) {}

    void init(Rng& rng) { critic.init(rng); }

    Tensor<T> forward(const Tensor<T>& img) const { return critic.scores(img); }

    typename ConvCritic<T>::Output forward_with_features(const Tensor<T>& img) const {
        return critic.forward(img);
    }

    std::uint64_t macs(int h, int w) const { return critic.macs(h, w); }

    void collect_params(const std::string& p, NamedParams<T>& out) const {
        critic.collect_params(p, out);
    }
};

// Structural critic (D2): scores the image concatenated with the
// normalized log-magnitude and phase planes of its spectrum.
template <typename T>
struct FourierDiscriminator {
    FourierDiscConfig cfg;
    ConvCritic<T> critic;

    FourierDiscriminator() = default;
    explicit FourierDiscriminator(const FourierDiscConfig& c)
        : cfg(c), critic(c.input_channels(), c.base_width, c.stride2_layers) {}

    void init(Rng& rng) { critic.init(rng); }

    typename ConvCritic<T>::Output forward_with_features(const Tensor<T>& img) const {
        const Tensor<T> planes =
            cfg.spectrum_source == SpectrumSource::Gray ? grayscale(img) : img;
        return critic.forward(concat_channels<T>({img, spectrum_features(planes)}));
    }

    Tensor<T> forward(const Tensor<T>& img) const { return forward_with_features(img).scores; }

    std::uint64_t macs(int h, int w) const { return critic.macs(h, w); }

    void collect_params(const std::string& p, NamedParams<T>& out) const {
        critic.collect_params(p, out);
    }
};

}  // namespace afnet
