#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "afnet/data.hpp"
#include "afnet/discriminator.hpp"
#include "afnet/generator.hpp"
#include "afnet/losses.hpp"

namespace afnet {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("expected a boolean, got '" + v + "'");
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// Every tunable of the artifact as one flat key=value namespace. The same
// keys appear in config files, CLI flags, resolved snapshots and
// checkpoint headers.
struct RunConfig {
    // run
    std::uint64_t seed = 0;
    std::string input_mode = "srgb3";
    bool checked_mode = false;

    // training
    int epochs = 1000;
    int batch_size = 4;
    double lr0 = 1e-4;
    double lr_decay_factor = 0.5;
    int lr_decay_epochs = 200;
    int crop = 256;
    bool augment_enabled = true;
    bool aug_flips = true;
    bool aug_rotations = true;
    bool aug_photometric = true;
    double aug_gamma_lo = 0.6, aug_gamma_hi = 1.4;
    double aug_gain_lo = 0.7, aug_gain_hi = 1.3;
    double aug_noise_sigma = 0.02;
    bool stage1_aux_l1 = false;

    // generator
    int base_channels = 16;
    int blocks_per_scale = 1;
    bool use_cmsfe_a = true;
    int cmsfe_split = 4;
    std::string cmsfe_kernels = "1,3,5,7";
    int attention_reduction = 4;
    int rdb_count = 7;
    int rdb_layers = 4;
    int rdb_growth = 16;
    int block_channels = 32;
    bool single_stage = false;

    // discriminators
    bool use_patch_gan = true;
    bool use_fourier_gan = true;
    std::string spectrum_source = "gray";
    int disc_base_width = 64;
    int disc_stride2_layers = 4;

    // losses
    double lambda_l1 = 1.0;
    double lambda_ms_ssim = 1.0;
    double lambda_scal = 0.01;
    double lambda_p_adv = 0.5;
    double lambda_f_adv = 0.5;
    int msssim_levels = 3;
    double scal_tau = 0.5;
    std::string scal_source = "patch";  // critic that supplies SCAL features

    // raw front-end
    double raw_gain = 1.0;

    struct Key {
        std::string name;
        std::function<std::string(const RunConfig&)> get;
        std::function<void(RunConfig&, const std::string&)> set;
    };

    static const std::vector<Key>& keys() {
        static const std::vector<Key> table = [] {
            std::vector<Key> t;
            auto add_int = [&](const char* n, int RunConfig::* f) {
                t.push_back({n, [f](const RunConfig& c) { return std::to_string(c.*f); },
                             [f, n](RunConfig& c, const std::string& v) {
                                 try {
                                     c.*f = std::stoi(v);
                                 } catch (const std::exception&) {
                                     throw ConfigError(std::string(n) + ": bad integer '" + v + "'");
                                 }
                             }});
            };
            auto add_u64 = [&](const char* n, std::uint64_t RunConfig::* f) {
                t.push_back({n, [f](const RunConfig& c) { return std::to_string(c.*f); },
                             [f, n](RunConfig& c, const std::string& v) {
                                 try {
                                     c.*f = std::stoull(v);
                                 } catch (const std::exception&) {
                                     throw ConfigError(std::string(n) + ": bad integer '" + v + "'");
                                 }
                             }});
            };
            auto add_double = [&](const char* n, double RunConfig::* f) {
                t.push_back({n,
                             [f](const RunConfig& c) { return detail::format_double(c.*f); },
                             [f, n](RunConfig& c, const std::string& v) {
                                 try {
                                     c.*f = std::stod(v);
                                 } catch (const std::exception&) {
                                     throw ConfigError(std::string(n) + ": bad number '" + v + "'");
                                 }
                             }});
            };
            auto add_bool = [&](const char* n, bool RunConfig::* f) {
                t.push_back({n,
                             [f](const RunConfig& c) { return (c.*f) ? "true" : "false"; },
                             [f](RunConfig& c, const std::string& v) {
                                 c.*f = detail::parse_bool(v);
                             }});
            };
            auto add_string = [&](const char* n, std::string RunConfig::* f) {
                t.push_back({n, [f](const RunConfig& c) { return c.*f; },
                             [f](RunConfig& c, const std::string& v) { c.*f = v; }});
            };

            add_u64("seed", &RunConfig::seed);
            add_string("input_mode", &RunConfig::input_mode);
            add_bool("checked_mode", &RunConfig::checked_mode);
            add_int("epochs", &RunConfig::epochs);
            add_int("batch_size", &RunConfig::batch_size);
            add_double("lr0", &RunConfig::lr0);
            add_double("lr_decay_factor", &RunConfig::lr_decay_factor);
            add_int("lr_decay_epochs", &RunConfig::lr_decay_epochs);
            add_int("crop", &RunConfig::crop);
            add_bool("augment", &RunConfig::augment_enabled);
            add_bool("aug_flips", &RunConfig::aug_flips);
            add_bool("aug_rotations", &RunConfig::aug_rotations);
            add_bool("aug_photometric", &RunConfig::aug_photometric);
            add_double("aug_gamma_lo", &RunConfig::aug_gamma_lo);
            add_double("aug_gamma_hi", &RunConfig::aug_gamma_hi);
            add_double("aug_gain_lo", &RunConfig::aug_gain_lo);
            add_double("aug_gain_hi", &RunConfig::aug_gain_hi);
            add_double("aug_noise_sigma", &RunConfig::aug_noise_sigma);
            add_bool("stage1_aux_l1", &RunConfig::stage1_aux_l1);
            add_int("base_channels", &RunConfig::base_channels);
            add_int("blocks_per_scale", &RunConfig::blocks_per_scale);
            add_bool("use_cmsfe_a", &RunConfig::use_cmsfe_a);
            add_int("cmsfe_split", &RunConfig::cmsfe_split);
            add_string("cmsfe_kernels", &RunConfig::cmsfe_kernels);
            add_int("attention_reduction", &RunConfig::attention_reduction);
            add_int("rdb_count", &RunConfig::rdb_count);
            add_int("rdb_layers", &RunConfig::rdb_layers);
            add_int("rdb_growth", &RunConfig::rdb_growth);
            add_int("block_channels", &RunConfig::block_channels);
            add_bool("single_stage", &RunConfig::single_stage);
            add_bool("use_patch_gan", &RunConfig::use_patch_gan);
            add_bool("use_fourier_gan", &RunConfig::use_fourier_gan);
            add_string("spectrum_source", &RunConfig::spectrum_source);
            add_int("disc_base_width", &RunConfig::disc_base_width);
            add_int("disc_stride2_layers", &RunConfig::disc_stride2_layers);
            add_double("lambda_l1", &RunConfig::lambda_l1);
            add_double("lambda_ms_ssim", &RunConfig::lambda_ms_ssim);
            add_double("lambda_scal", &RunConfig::lambda_scal);
            add_double("lambda_p_adv", &RunConfig::lambda_p_adv);
            add_double("lambda_f_adv", &RunConfig::lambda_f_adv);
            add_int("msssim_levels", &RunConfig::msssim_levels);
            add_double("scal_tau", &RunConfig::scal_tau);
            add_string("scal_source", &RunConfig::scal_source);
            add_double("raw_gain", &RunConfig::raw_gain);
            return t;
        }();
        return table;
    }

    void set(const std::string& key, const std::string& value) {
        for (const auto& k : keys())
            if (k.name == key) {
                k.set(*this, value);
                return;
            }
        throw ConfigError("unknown config key '" + key + "'");
    }

    std::string get(const std::string& key) const {
        for (const auto& k : keys())
            if (k.name == key) return k.get(*this);
        throw ConfigError("unknown config key '" + key + "'");
    }

    // Fully resolved snapshot, one key per line.
    std::string resolved_text() const {
        std::string out;
        for (const auto& k : keys()) out += k.name + " = " + k.get(*this) + "\n";
        return out;
    }

    void apply_text(const std::string& text, const std::string& origin = "<config>") {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
            set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
        }
    }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        apply_text(ss.str(), path);
    }

    // ---- derived module configs ----

    InputMode mode() const { return input_mode_from_string(input_mode); }

    std::vector<int> kernel_list() const {
        std::vector<int> ks;
        std::istringstream in(cmsfe_kernels);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            tok = detail::trim(tok);
            if (tok.empty()) continue;
            try {
                ks.push_back(std::stoi(tok));
            } catch (const std::exception&) {
                throw ConfigError("cmsfe_kernels: bad entry '" + tok + "'");
            }
        }
        return ks;
    }

    GeneratorConfig generator_config() const {
        GeneratorConfig g;
        g.input_mode = mode();
        g.single_stage = single_stage;
        g.stage1.in_channels = channels_for(g.input_mode);
        g.stage1.base_channels = base_channels;
        g.stage1.blocks_per_scale = blocks_per_scale;
        g.stage1.use_cmsfe_a = use_cmsfe_a;
        g.stage1.cmsfe.split = cmsfe_split;
        g.stage1.cmsfe.kernel_sizes = kernel_list();
        g.stage1.cmsfe.attention_reduction = attention_reduction;
        g.stage2.num_blocks = rdb_count;
        g.stage2.layers_per_block = rdb_layers;
        g.stage2.growth = rdb_growth;
        g.stage2.block_channels = block_channels;
        return g;
    }

    PatchDiscConfig patch_config() const { return {disc_base_width, disc_stride2_layers}; }

    FourierDiscConfig fourier_config() const {
        FourierDiscConfig f;
        if (spectrum_source == "gray")
            f.spectrum_source = SpectrumSource::Gray;
        else if (spectrum_source == "per_rgb_channel" || spectrum_source == "rgb")
            f.spectrum_source = SpectrumSource::PerRgbChannel;
        else
            throw ConfigError("spectrum_source must be 'gray' or 'per_rgb_channel'");
        f.base_width = disc_base_width;
        f.stride2_layers = disc_stride2_layers;
        return f;
    }

    LossWeights loss_weights() const {
        LossWeights w;
        w.l1 = lambda_l1;
        w.ms_ssim = lambda_ms_ssim;
        w.scal = lambda_scal;
        w.p_adv = use_patch_gan ? lambda_p_adv : 0.0;
        w.f_adv = use_fourier_gan ? lambda_f_adv : 0.0;
        // SCAL needs its feature-providing critic in the build
        const bool scal_critic_present =
            scal_source == "fourier" ? use_fourier_gan : use_patch_gan;
        if (!scal_critic_present) w.scal = 0.0;
        return w;
    }

    AugmentConfig augment_config() const {
        AugmentConfig a;
        a.flips = aug_flips;
        a.rotations = aug_rotations;
        a.photometric = aug_photometric;
        a.gamma_lo = aug_gamma_lo;
        a.gamma_hi = aug_gamma_hi;
        a.gain_lo = aug_gain_lo;
        a.gain_hi = aug_gain_hi;
        a.noise_sigma_max = aug_noise_sigma;
        return a;
    }

    void validate() const {
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (crop % 32 != 0) throw ConfigError("crop must be divisible by 32");
        if (mode() == InputMode::Raw4 && crop % 64 != 0)
            throw ConfigError("crop must be divisible by 64 in raw4 mode");
        if (rdb_count < 1) throw ConfigError("rdb_count must be >= 1");
        if (lr_decay_epochs < 1) throw ConfigError("lr_decay_epochs must be >= 1");
        if (msssim_levels < 1 || msssim_levels > 5)
            throw ConfigError("msssim_levels must be in [1,5]");
        if (scal_source != "patch" && scal_source != "fourier")
            throw ConfigError("scal_source must be 'patch' or 'fourier'");
        try {
            loss_weights().validate();
            const GeneratorConfig g = generator_config();
            if (g.stage1.use_cmsfe_a)
                for (int mult : {1, 2, 4}) {
                    CMSFEAConfig bc = g.stage1.cmsfe;
                    bc.channels = mult * g.stage1.base_channels;
                    bc.validate();
                }
            fourier_config();
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
};

}  // namespace afnet
