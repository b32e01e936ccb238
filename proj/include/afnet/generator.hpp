#pragma once

#include <string>
#include <utility>
#include <vector>

#include "afnet/conv.hpp"
#include "afnet/ops.hpp"
#include "afnet/resample.hpp"
#include "afnet/tensor.hpp"

namespace afnet {

template <typename T>
using NamedParams = std::vector<std::pair<std::string, Tensor<T>>>;

// ---- configs ----

struct CMSFEAConfig {
    int channels = 0;
    int split = 4;
    std::vector<int> kernel_sizes = {1, 3, 5, 7};
    int attention_reduction = 4;

    void validate() const {
        if (split < 1 || channels % split != 0)
            throw ParameterError("cMSFE-A: channels must be divisible by split");
        if (int(kernel_sizes.size()) != split)
            throw ParameterError("cMSFE-A: need one kernel size per split part");
        for (int k : kernel_sizes)
            if (k < 1 || k % 2 == 0) throw ParameterError("cMSFE-A: kernel sizes must be odd");
        if (attention_reduction < 1) throw ParameterError("cMSFE-A: reduction must be >= 1");
    }
};

struct Stage1Config {
    int in_channels = 3;
    int base_channels = 16;
    int blocks_per_scale = 1;
    bool use_cmsfe_a = true;
    CMSFEAConfig cmsfe;  // channels filled per scale
};

struct RDBConfig {
    int num_blocks = 7;      // D
    int layers_per_block = 4;  // L
    int growth = 16;         // G
    int block_channels = 32;
};

struct GeneratorConfig {
    InputMode input_mode = InputMode::Srgb3;
    bool single_stage = false;
    Stage1Config stage1;
    RDBConfig stage2;
};

// ---- modules ----

// Squeeze-excitation gate: gap -> 1x1 down -> relu -> 1x1 up -> sigmoid,
// applied channelwise.
template <typename T>
struct ChannelAttention {
    Conv2d<T> down, up;

    ChannelAttention() = default;
    ChannelAttention(int channels, int reduction) {
        const int hidden = std::max(1, channels / reduction);
        down = Conv2d<T>(channels, hidden, 1);
        up = Conv2d<T>(hidden, channels, 1);
    }

    void init(Rng& rng) {
        down.init(rng);
        up.init(rng);
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        Tensor<T> w = sigmoid(up.forward(relu(down.forward(global_avg_pool(x)))));
        return broadcast_mul(x, w);
    }

    std::uint64_t macs(int, int) const { return down.macs(1, 1) + up.macs(1, 1); }

    void collect_macs(const std::string& p, int, int, MacEntries& out) const {
        down.collect_macs(p + ".down", 1, 1, out);
        up.collect_macs(p + ".up", 1, 1, out);
    }

    void collect_params(const std::string& p, NamedParams<T>& out) const {
        down.collect_params(p + ".down", out);
        up.collect_params(p + ".up", out);
    }
};

// Channel split -> per-part convolutions of different kernel size ->
// attention gate per branch -> concat -> 1x1 fusion -> residual.
template <typename T>
struct CMSFEABlock {
    CMSFEAConfig cfg;
    std::vector<Conv2d<T>> branches;
    std::vector<ChannelAttention<T>> gates;
    Conv2d<T> fuse;

    CMSFEABlock() = default;
    explicit CMSFEABlock(const CMSFEAConfig& c) : cfg(c) {
        cfg.validate();
        const int part = cfg.channels / cfg.split;
        for (int i = 0; i < cfg.split; ++i) {
            const int k = cfg.kernel_sizes[i];
            branches.emplace_back(part, part, k, 1, k / 2);
            gates.emplace_back(part, cfg.attention_reduction);
        }
        fuse = Conv2d<T>(cfg.channels, cfg.channels, 1);
    }

    void init(Rng& rng) {
        for (auto& b : branches) b.init(rng);
        for (auto& g : gates) g.init(rng);
        fuse.init(rng);
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        if (x.shape().c != cfg.channels)
            throw DimensionError("cMSFE-A: expected " + std::to_string(cfg.channels) + " channels");
        auto parts = channel_split(x, cfg.split);
        std::vector<Tensor<T>> outs;
        outs.reserve(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i)
            outs.push_back(gates[i].forward(branches[i].forward(parts[i])));
        return add(fuse.forward(concat_channels(outs)), x);
    }

    std::uint64_t macs(int h, int w) const {
        std::uint64_t total = fuse.macs(h, w);
        for (std::size_t i = 0; i < branches.size(); ++i)
            total += branches[i].macs(h, w) + gates[i].macs(h, w);
        return total;
    }

    void collect_macs(const std::string& p, int h, int w, MacEntries& out) const {
        for (std::size_t i = 0; i < branches.size(); ++i) {
            branches[i].collect_macs(p + ".branch" + std::to_string(i), h, w, out);
            gates[i].collect_macs(p + ".gate" + std::to_string(i), h, w, out);
        }
        fuse.collect_macs(p + ".fuse", h, w, out);
    }

    void collect_params(const std::string& p, NamedParams<T>& out) const {
        for (std::size_t i = 0; i < branches.size(); ++i) {
            branches[i].collect_params(p + ".branch" + std::to_string(i), out);
            gates[i].collect_params(p + ".gate" + std::to_string(i), out);
        }
        fuse.collect_params(p + ".fuse", out);
    }
};

// Illumination balancing stage: encoder-decoder over the 1/2, 1/8, 1/32
// scales with skip connections. Feature blocks at each scale are cMSFE-A
// when enabled; the plain variant keeps only the trunk.
template <typename T>
struct Stage1 {
    Stage1Config cfg;
    Conv2d<T> stem;            // in -> B, stride 2
    Conv2d<T> down1a, down1b;  // B -> 2B, 1/2 -> 1/8
    Conv2d<T> down2a, down2b;  // 2B -> 4B, 1/8 -> 1/32
    Conv2d<T> up1;             // (4B + 2B) -> 2B after x4 upsample + skip
    Conv2d<T> up2;             // (2B + B) -> B
    Conv2d<T> head;            // B -> in
    std::vector<CMSFEABlock<T>> enc2, enc8, bott, dec8, dec2;

    Stage1() = default;
    explicit Stage1(const Stage1Config& c) : cfg(c) {
        const int b = cfg.base_channels;
        stem = Conv2d<T>(cfg.in_channels, b, 3, 2, 1);
        down1a = Conv2d<T>(b, 2 * b, 3, 2, 1);
        down1b = Conv2d<T>(2 * b, 2 * b, 3, 2, 1);
        down2a = Conv2d<T>(2 * b, 4 * b, 3, 2, 1);
        down2b = Conv2d<T>(4 * b, 4 * b, 3, 2, 1);
        up1 = Conv2d<T>(6 * b, 2 * b, 3, 1, 1);
        up2 = Conv2d<T>(3 * b, b, 3, 1, 1);
        head = Conv2d<T>(b, cfg.in_channels, 3, 1, 1);
        if (cfg.use_cmsfe_a) {
            auto make_blocks = [&](int channels, std::vector<CMSFEABlock<T>>& dst) {
                CMSFEAConfig bc = cfg.cmsfe;
                bc.channels = channels;
                for (int i = 0; i < cfg.blocks_per_scale; ++i) dst.emplace_back(bc);
            };
            make_blocks(b, enc2);
            make_blocks(2 * b, enc8);
            make_blocks(4 * b, bott);
            make_blocks(2 * b, dec8);
            make_blocks(b, dec2);
        }
    }

    void init(Rng& rng) {
        stem.init(rng);
        down1a.init(rng);
        down1b.init(rng);
        down2a.init(rng);
        down2b.init(rng);
        up1.init(rng);
        up2.init(rng);
        head.init(rng);
        for (auto* blocks : {&enc2, &enc8, &bott, &dec8, &dec2})
            for (auto& blk : *blocks) blk.init(rng);
    }

    static Tensor<T> run_blocks(const std::vector<CMSFEABlock<T>>& blocks, Tensor<T> x) {
        for (const auto& blk : blocks) x = blk.forward(x);
        return x;
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        const Shape s = x.shape();
        if (s.c != cfg.in_channels)
            throw DimensionError("stage1: expected " + std::to_string(cfg.in_channels) +
                                 " input channels, got " + std::to_string(s.c));
        if (s.h % 32 != 0 || s.w % 32 != 0 || s.h < 32 || s.w < 32)
            throw DimensionError("stage1: spatial dims must be multiples of 32, got " + s.str());

        Tensor<T> f2 = run_blocks(enc2, relu(stem.forward(x)));
        Tensor<T> f8 = run_blocks(enc8, relu(down1b.forward(relu(down1a.forward(f2)))));
        Tensor<T> f32 = run_blocks(bott, relu(down2b.forward(relu(down2a.forward(f8)))));

        Tensor<T> d8 = bicubic_resample(f32, Scale::up(4));
        d8 = run_blocks(dec8, relu(up1.forward(concat_channels<T>({d8, f8}))));
        Tensor<T> d2 = bicubic_resample(d8, Scale::up(4));
        d2 = run_blocks(dec2, relu(up2.forward(concat_channels<T>({d2, f2}))));
        return sigmoid(head.forward(bicubic_resample(d2, Scale::up(2))));
    }

    void collect_macs(const std::string& p, int h, int w, MacEntries& out) const {
        const int h2 = h / 2, w2 = w / 2, h8 = h / 8, w8 = w / 8, h32 = h / 32, w32 = w / 32;
        auto blocks_macs = [&](const char* name, const std::vector<CMSFEABlock<T>>& blocks, int bh,
                               int bw) {
            for (std::size_t i = 0; i < blocks.size(); ++i)
                blocks[i].collect_macs(p + "." + name + ".block" + std::to_string(i), bh, bw, out);
        };
        stem.collect_macs(p + ".stem", h, w, out);
        blocks_macs("enc2", enc2, h2, w2);
        down1a.collect_macs(p + ".down1a", h2, w2, out);
        down1b.collect_macs(p + ".down1b", h2 / 2, w2 / 2, out);
        blocks_macs("enc8", enc8, h8, w8);
        down2a.collect_macs(p + ".down2a", h8, w8, out);
        down2b.collect_macs(p + ".down2b", h8 / 2, w8 / 2, out);
        blocks_macs("bott", bott, h32, w32);
        up1.collect_macs(p + ".up1", h8, w8, out);
        blocks_macs("dec8", dec8, h8, w8);
        up2.collect_macs(p + ".up2", h2, w2, out);
        blocks_macs("dec2", dec2, h2, w2);
        head.collect_macs(p + ".head", h, w, out);
    }

    std::uint64_t macs(int h, int w) const {
        MacEntries entries;
        collect_macs("stage1", h, w, entries);
        std::uint64_t total = 0;
        for (const auto& [name, m] : entries) total += m;
        return total;
    }

    void collect_params(const std::string& p, NamedParams<T>& out) const {
        stem.collect_params(p + ".stem", out);
        down1a.collect_params(p + ".down1a", out);
        down1b.collect_params(p + ".down1b", out);
        down2a.collect_params(p + ".down2a", out);
        down2b.collect_params(p + ".down2b", out);
        up1.collect_params(p + ".up1", out);
        up2.collect_params(p + ".up2", out);
        head.collect_params(p + ".head", out);
        auto walk = [&](const char* name, const std::vector<CMSFEABlock<T>>& blocks) {
            for (std::size_t i = 0; i < blocks.size(); ++i)
                blocks[i].collect_params(p + "." + name + ".block" + std::to_string(i), out);
        };
        walk("enc2", enc2);
        walk("enc8", enc8);
        walk("bott", bott);
        walk("dec8", dec8);
        walk("dec2", dec2);
    }
};

// Residual dense block: L densely connected 3x3 conv layers, 1x1 local
// fusion, local residual.
template <typename T>
struct RDB {
    int block_channels = 0, layers = 0, growth = 0;
    std::vector<Conv2d<T>> dense;
    Conv2d<T> fusion;

    RDB() = default;
    RDB(int channels, int layers_, int growth_)
        : block_channels(channels), layers(layers_), growth(growth_) {
        for (int i = 0; i < layers; ++i)
            dense.emplace_back(channels + i * growth, growth, 3, 1, 1);
        fusion = Conv2d<T>(channels + layers * growth, channels, 1);
    }

    void init(Rng& rng) {
        for (auto& d : dense) d.init(rng);
        fusion.init(rng);
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        if (x.shape().c != block_channels)
            throw DimensionError("RDB: expected " + std::to_string(block_channels) + " channels");
        std::vector<Tensor<T>> feats{x};
        for (const auto& layer : dense) {
            Tensor<T> cat = feats.size() == 1 ? feats[0] : concat_channels(feats);
            feats.push_back(relu(layer.forward(cat)));
        }
        return add(fusion.forward(concat_channels(feats)), x);
    }

    std::uint64_t macs(int h, int w) const {
        std::uint64_t total = fusion.macs(h, w);
        for (const auto& d : dense) total += d.macs(h, w);
        return total;
    }

    void collect_macs(const std::string& p, int h, int w, MacEntries& out) const {
        for (std::size_t i = 0; i < dense.size(); ++i)
            dense[i].collect_macs(p + ".dense" + std::to_string(i), h, w, out);
        fusion.collect_macs(p + ".fusion", h, w, out);
    }

    void collect_params(const std::string& p, NamedParams<T>& out) const {
        for (std::size_t i = 0; i < dense.size(); ++i)
            dense[i].collect_params(p + ".dense" + std::to_string(i), out);
        fusion.collect_params(p + ".fusion", out);
    }
};

// Restoration stage at full input resolution: stem over the concatenated
// (original, balanced) pair, chained RDBs, global feature fusion, global
// residual, sigmoid head.
template <typename T>
struct Stage2 {
    RDBConfig cfg;
    int in_channels = 3;
    Conv2d<T> stem, gff, head;
    std::vector<RDB<T>> blocks;

    Stage2() = default;
    Stage2(const RDBConfig& c, int image_channels) : cfg(c), in_channels(image_channels) {
        stem = Conv2d<T>(2 * in_channels, cfg.block_channels, 3, 1, 1);
        for (int i = 0; i < cfg.num_blocks; ++i)
            blocks.emplace_back(cfg.block_channels, cfg.layers_per_block, cfg.growth);
        gff = Conv2d<T>(cfg.num_blocks * cfg.block_channels, cfg.block_channels, 1);
        head = Conv2d<T>(cfg.block_channels, 3, 3, 1, 1);
    }

    void init(Rng& rng) {
        stem.init(rng);
        for (auto& b : blocks) b.init(rng);
        gff.init(rng);
        head.init(rng);
    }

    Tensor<T> forward(const Tensor<T>& original, const Tensor<T>& balanced) const {
        if (original.shape() != balanced.shape())
            throw DimensionError("stage2: original and balanced shapes differ");
        Tensor<T> f0 = stem.forward(concat_channels<T>({original, balanced}));
        std::vector<Tensor<T>> outs;
        Tensor<T> cur = f0;
        for (const auto& b : blocks) {
            cur = b.forward(cur);
            outs.push_back(cur);
        }
        Tensor<T> fused = gff.forward(outs.size() == 1 ? outs[0] : concat_channels(outs));
        return sigmoid(head.forward(add(fused, f0)));
    }

    std::uint64_t macs(int h, int w) const {
        std::uint64_t total = stem.macs(h, w) + gff.macs(h, w) + head.macs(h, w);
        for (const auto& b : blocks) total += b.macs(h, w);
        return total;
    }

    void collect_macs(const std::string& p, int h, int w, MacEntries& out) const {
        stem.collect_macs(p + ".stem", h, w, out);
        for (std::size_t i = 0; i < blocks.size(); ++i)
            blocks[i].collect_macs(p + ".rdb" + std::to_string(i), h, w, out);
        gff.collect_macs(p + ".gff", h, w, out);
        head.collect_macs(p + ".head", h, w, out);
    }

    void collect_params(const std::string& p, NamedParams<T>& out) const {
        stem.collect_params(p + ".stem", out);
        for (std::size_t i = 0; i < blocks.size(); ++i)
            blocks[i].collect_params(p + ".rdb" + std::to_string(i), out);
        gff.collect_params(p + ".gff", out);
        head.collect_params(p + ".head", out);
    }
};

// The full two-stage enhancement network.
template <typename T>
struct Generator {
    GeneratorConfig cfg;
    Stage1<T> stage1;
    Stage2<T> stage2;

    Generator() = default;
    explicit Generator(GeneratorConfig c) : cfg(std::move(c)) {
        cfg.stage1.in_channels = channels_for(cfg.input_mode);
        if (cfg.input_mode == InputMode::Raw4 && cfg.single_stage)
            throw ParameterError("single_stage is only meaningful in srgb3 mode");
        stage1 = Stage1<T>(cfg.stage1);
        if (!cfg.single_stage) stage2 = Stage2<T>(cfg.stage2, cfg.stage1.in_channels);
    }

    void init(Rng& rng) {
        stage1.init(rng);
        if (!cfg.single_stage) stage2.init(rng);
    }

    struct Output {
        Tensor<T> balanced;
        Tensor<T> final;
    };

    Output forward(const Tensor<T>& x) const {
        if (x.shape().c != channels_for(cfg.input_mode))
            throw DimensionError("generator: input has " + std::to_string(x.shape().c) +
                                 " channels, mode expects " +
                                 std::to_string(channels_for(cfg.input_mode)));
        Tensor<T> balanced = stage1.forward(x);
        if (cfg.single_stage) return {balanced, balanced};
        Tensor<T> restored = stage2.forward(x, balanced);
        if (cfg.input_mode == InputMode::Raw4)
            restored = bicubic_resample(restored, Scale::up(2));
        return {balanced, restored};
    }

    // Inference cost at an h x w input; stage 2 runs at full resolution.
    void collect_macs(int h, int w, MacEntries& out) const {
        stage1.collect_macs("stage1", h, w, out);
        if (!cfg.single_stage) stage2.collect_macs("stage2", h, w, out);
    }

    std::uint64_t macs(int h, int w) const {
        MacEntries entries;
        collect_macs(h, w, entries);
        std::uint64_t total = 0;
        for (const auto& [name, m] : entries) total += m;
        return total;
    }

    void collect_params(NamedParams<T>& out) const {
        stage1.collect_params("stage1", out);
        if (!cfg.single_stage) stage2.collect_params("stage2", out);
    }

    std::vector<Tensor<T>> parameters() const {
        NamedParams<T> named;
        collect_params(named);
        std::vector<Tensor<T>> out;
        out.reserve(named.size());
        for (auto& [name, t] : named) out.push_back(t);
        return out;
    }
};

}  // namespace afnet
