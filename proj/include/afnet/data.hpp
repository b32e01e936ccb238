#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "afnet/image.hpp"
#include "afnet/raw.hpp"
#include "afnet/resample.hpp"
#include "afnet/tensor.hpp"

namespace afnet {

// ---- geometric transforms (plain value ops, no graph) ----

template <typename T>
Tensor<T> flip_horizontal(const Tensor<T>& x) {
    const Shape s = x.shape();
    Tensor<T> out = Tensor<T>::zeros(s);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y)
                for (int xx = 0; xx < s.w; ++xx)
                    out.data()[s.index(n, c, y, xx)] = x.data()[s.index(n, c, y, s.w - 1 - xx)];
    return out;
}

template <typename T>
Tensor<T> flip_vertical(const Tensor<T>& x) {
    const Shape s = x.shape();
    Tensor<T> out = Tensor<T>::zeros(s);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y)
                for (int xx = 0; xx < s.w; ++xx)
                    out.data()[s.index(n, c, y, xx)] = x.data()[s.index(n, c, s.h - 1 - y, xx)];
    return out;
}

// Counter-clockwise quarter turns.
template <typename T>
Tensor<T> rot90(const Tensor<T>& x, int quarter_turns) {
    int k = ((quarter_turns % 4) + 4) % 4;
    if (k == 0) return x.detach();
    const Shape s = x.shape();
    const bool swap = (k % 2) == 1;
    const Shape os(s.n, s.c, swap ? s.w : s.h, swap ? s.h : s.w);
    Tensor<T> out = Tensor<T>::zeros(os);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y)
                for (int xx = 0; xx < s.w; ++xx) {
                    int oy = 0, ox = 0;
                    if (k == 1) { oy = s.w - 1 - xx; ox = y; }
                    if (k == 2) { oy = s.h - 1 - y; ox = s.w - 1 - xx; }
                    if (k == 3) { oy = xx; ox = s.h - 1 - y; }
                    out.data()[os.index(n, c, oy, ox)] = x.data()[s.index(n, c, y, xx)];
                }
    return out;
}

// ---- augmentation ----

struct AugmentConfig {
    bool flips = true;
    bool rotations = true;
    bool photometric = true;
    double gamma_lo = 0.6, gamma_hi = 1.4;
    double gain_lo = 0.7, gain_hi = 1.3;
    double noise_sigma_max = 0.02;
};

// Synchronized geometric transforms on both images; illumination-variety
// transforms (gamma, gain, noise) on the low image only. Outputs clamped
// to [0,1].
template <typename T>
std::pair<Tensor<T>, Tensor<T>> augment(const Tensor<T>& low, const Tensor<T>& high, Rng& rng,
                                        const AugmentConfig& cfg = {}) {
    Tensor<T> lo = low.detach(), hi = high.detach();
    if (cfg.flips) {
        if (rng.uniform() < 0.5) { lo = flip_horizontal(lo); hi = flip_horizontal(hi); }
        if (rng.uniform() < 0.5) { lo = flip_vertical(lo); hi = flip_vertical(hi); }
    }
    if (cfg.rotations) {
        const int k = int(rng.below(4));
        if (k) { lo = rot90(lo, k); hi = rot90(hi, k); }
    }
    if (cfg.photometric) {
        const double gamma = rng.uniform(cfg.gamma_lo, cfg.gamma_hi);
        const double gain = rng.uniform(cfg.gain_lo, cfg.gain_hi);
        const double sigma = rng.uniform(0.0, cfg.noise_sigma_max);
        for (auto& v : lo.data()) {
            double u = gain * std::pow(std::max(0.0, double(v)), gamma) + sigma * rng.normal();
            v = T(std::clamp(u, 0.0, 1.0));
        }
    }
    return {lo, hi};
}

// ---- paired datasets ----

// Directory layout: <root>/low and <root>/high with matching filenames.
// RAW mode keeps 16-bit mosaics plus .txt sidecars in low/.
struct PairedDataset {
    struct Item {
        std::string name;
        std::string low_path, high_path, sidecar_path;
    };

    InputMode mode = InputMode::Srgb3;
    double raw_gain = 1.0;
    std::vector<Item> items;

    std::size_t size() const { return items.size(); }

    static PairedDataset scan(const std::string& root, InputMode mode, double raw_gain = 1.0) {
        namespace fs = std::filesystem;
        const fs::path low_dir = fs::path(root) / "low";
        const fs::path high_dir = fs::path(root) / "high";
        if (!fs::is_directory(low_dir) || !fs::is_directory(high_dir))
            throw DataError("dataset root " + root + " must contain low/ and high/ directories");
        PairedDataset ds;
        ds.mode = mode;
        ds.raw_gain = raw_gain;
        std::vector<fs::path> lows;
        for (const auto& e : fs::directory_iterator(low_dir))
            if (e.is_regular_file() && e.path().extension() == ".png") lows.push_back(e.path());
        std::sort(lows.begin(), lows.end());
        for (const auto& p : lows) {
            Item item;
            item.name = p.stem().string();
            item.low_path = p.string();
            const fs::path high = high_dir / p.filename();
            if (!fs::exists(high))
                throw DataError("low image " + p.filename().string() + " has no high counterpart");
            item.high_path = high.string();
            if (mode == InputMode::Raw4) {
                fs::path sidecar = p;
                sidecar.replace_extension(".txt");
                if (!fs::exists(sidecar))
                    throw FormatError("raw mosaic " + p.filename().string() + " has no sidecar");
                item.sidecar_path = sidecar.string();
            }
            ds.items.push_back(std::move(item));
        }
        if (ds.items.empty()) throw DataError("dataset root " + root + " has no paired images");
        return ds;
    }

    // (low, high); raw mode packs the mosaic and checks the 2x resolution
    // relation against the ground truth.
    std::pair<Tensor<float>, Tensor<float>> load(std::size_t i) const {
        const Item& item = items.at(i);
        Tensor<float> high = load_image<float>(item.high_path);
        if (high.shape().c != 3) throw DataError(item.high_path + ": ground truth must be RGB");
        Tensor<float> low;
        if (mode == InputMode::Srgb3) {
            low = load_image<float>(item.low_path);
            if (low.shape().c != 3) throw DataError(item.low_path + ": expected RGB image");
            if (low.shape() != high.shape())
                throw DataError(item.name + ": low/high shapes differ");
        } else {
            const BayerMosaic m = load_mosaic(item.low_path, item.sidecar_path);
            low = pack_raw<float>(m, raw_gain);
            if (high.shape().h != m.height || high.shape().w != m.width)
                throw DataError(item.name + ": ground truth must match mosaic resolution");
        }
        return {low, high};
    }
};

// Synchronized random crop. `crop` is measured at ground-truth resolution;
// in raw mode the packed input is cropped at half scale.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> random_crop_pair(const Tensor<T>& low, const Tensor<T>& high,
                                                 int crop, InputMode mode, Rng& rng) {
    const Shape hs = high.shape();
    if (crop > hs.h || crop > hs.w)
        throw DataError("crop " + std::to_string(crop) + " exceeds image size " + hs.str());
    const int scale = mode == InputMode::Raw4 ? 2 : 1;
    if (crop % scale != 0) throw ParameterError("crop must be even in raw mode");
    // keep raw crops aligned to the packed grid
    const int ymax = (hs.h - crop) / scale, xmax = (hs.w - crop) / scale;
    const int y = scale * int(rng.below(std::uint64_t(ymax) + 1));
    const int x = scale * int(rng.below(std::uint64_t(xmax) + 1));
    Tensor<T> hc = crop_spatial(high, y, x, crop, crop);
    Tensor<T> lc = crop_spatial(low, y / scale, x / scale, crop / scale, crop / scale);
    return {lc, hc};
}

}  // namespace afnet
