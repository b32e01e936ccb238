#pragma once

#include <cinttypes>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "afnet/checkpoint.hpp"
#include "afnet/config.hpp"
#include "afnet/data.hpp"
#include "afnet/discriminator.hpp"
#include "afnet/generator.hpp"
#include "afnet/losses.hpp"
#include "afnet/metrics.hpp"
#include "afnet/optim.hpp"

namespace afnet {

// Stacks same-shaped 1xCxHxW samples into one batch leaf.
template <typename T>
Tensor<T> batch_concat(const std::vector<Tensor<T>>& samples) {
    if (samples.empty()) throw DataError("batch_concat: empty batch");
    const Shape s0 = samples[0].shape();
    Tensor<T> out = Tensor<T>::zeros(Shape(int(samples.size()) * s0.n, s0.c, s0.h, s0.w));
    std::size_t off = 0;
    for (const auto& s : samples) {
        if (s.shape() != s0) throw DimensionError("batch_concat: mixed sample shapes");
        std::copy(s.data().begin(), s.data().end(), out.data().begin() + off);
        off += s.numel();
    }
    return out;
}

// 3-channel preview of a packed raw (R, (G1+G2)/2, B, upsampled 2x); used
// where a critic needs to look at the raw input.
template <typename T>
Tensor<T> raw_preview_rgb(const Tensor<T>& packed) {
    const Shape s = packed.shape();
    if (s.c != 4) throw DimensionError("raw_preview_rgb: expected 4 channels");
    NoGradGuard ng;
    Tensor<T> rgb = Tensor<T>::zeros(Shape(s.n, 3, s.h, s.w));
    for (int n = 0; n < s.n; ++n)
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x) {
                rgb.at(n, 0, y, x) = packed.at(n, 0, y, x);
                rgb.at(n, 1, y, x) = T(0.5) * (packed.at(n, 1, y, x) + packed.at(n, 3, y, x));
                rgb.at(n, 2, y, x) = packed.at(n, 2, y, x);
            }
    return bicubic_resample(rgb, Scale::up(2));
}

// The generator plus whichever critics the configuration enables, with
// their optimizers. Initialization order keeps generator weights
// independent of the critic flags.
struct TrainModels {
    RunConfig cfg;
    Generator<float> gen;
    PatchDiscriminator<float> d1;
    FourierDiscriminator<float> d2;
    bool has_d1 = false, has_d2 = false;
    Adam<float> opt_g, opt_d1, opt_d2;

    static TrainModels build(const RunConfig& cfg) {
        cfg.validate();
        TrainModels m;
        m.cfg = cfg;
        m.gen = Generator<float>(cfg.generator_config());
        Rng rng(cfg.seed);
        m.gen.init(rng);
        m.has_d1 = cfg.use_patch_gan;
        m.has_d2 = cfg.use_fourier_gan;
        if (m.has_d1) {
            m.d1 = PatchDiscriminator<float>(cfg.patch_config());
            m.d1.init(rng);
        }
        if (m.has_d2) {
            m.d2 = FourierDiscriminator<float>(cfg.fourier_config());
            m.d2.init(rng);
        }
        m.opt_g = Adam<float>(m.gen.parameters());
        if (m.has_d1) m.opt_d1 = Adam<float>(named_values(m.d1));
        if (m.has_d2) m.opt_d2 = Adam<float>(named_values(m.d2));
        return m;
    }

    template <typename M>
    static std::vector<Tensor<float>> named_values(const M& module) {
        NamedParams<float> named;
        module.collect_params("d", named);
        std::vector<Tensor<float>> out;
        out.reserve(named.size());
        for (auto& [name, t] : named) out.push_back(t);
        return out;
    }
};

// ---- checkpoint <-> models ----

inline Checkpoint make_checkpoint(const TrainModels& m, int epoch, double best_val_psnr) {
    Checkpoint ck;
    ck.epoch = epoch;
    ck.best_val_psnr = best_val_psnr;
    ck.adam_steps_g = m.opt_g.step_count();
    ck.adam_steps_d1 = m.has_d1 ? m.opt_d1.step_count() : 0;
    ck.adam_steps_d2 = m.has_d2 ? m.opt_d2.step_count() : 0;
    ck.config_text = m.cfg.resolved_text();

    auto add_params = [&ck](const NamedParams<float>& named, const std::string& prefix) {
        for (const auto& [name, t] : named) ck.add(prefix + "." + name, t.shape(), t.data());
    };
    auto add_moments = [&ck](const NamedParams<float>& named, const Adam<float>& opt,
                             const std::string& prefix) {
        const auto& ms = opt.first_moments();
        const auto& vs = opt.second_moments();
        for (std::size_t i = 0; i < named.size(); ++i) {
            ck.add(prefix + ".m." + named[i].first, named[i].second.shape(), ms[i]);
            ck.add(prefix + ".v." + named[i].first, named[i].second.shape(), vs[i]);
        }
    };

    NamedParams<float> gp;
    m.gen.collect_params(gp);
    add_params(gp, "g");
    add_moments(gp, m.opt_g, "adam.g");
    if (m.has_d1) {
        NamedParams<float> dp;
        m.d1.collect_params("d1", dp);
        add_params(dp, "d");
        add_moments(dp, m.opt_d1, "adam.d");
    }
    if (m.has_d2) {
        NamedParams<float> dp;
        m.d2.collect_params("d2", dp);
        add_params(dp, "d");
        add_moments(dp, m.opt_d2, "adam.d");
    }
    return ck;
}

inline void apply_checkpoint(TrainModels& m, const Checkpoint& ck) {
    std::size_t used = 0;
    auto restore_params = [&](const NamedParams<float>& named, const std::string& prefix) {
        for (const auto& [name, t] : named) {
            const auto& blob = ck.find(prefix + "." + name);
            if (!(blob.shape == t.shape()))
                throw FormatError("checkpoint tensor " + blob.name + " has shape " +
                                  blob.shape.str() + ", expected " + t.shape().str());
            const_cast<Tensor<float>&>(t).data() = blob.values;
            ++used;
        }
    };
    auto restore_moments = [&](const NamedParams<float>& named, Adam<float>& opt,
                               const std::string& prefix) {
        auto& ms = opt.first_moments();
        auto& vs = opt.second_moments();
        for (std::size_t i = 0; i < named.size(); ++i) {
            ms[i] = ck.find(prefix + ".m." + named[i].first).values;
            vs[i] = ck.find(prefix + ".v." + named[i].first).values;
            used += 2;
        }
    };

    NamedParams<float> gp;
    m.gen.collect_params(gp);
    restore_params(gp, "g");
    restore_moments(gp, m.opt_g, "adam.g");
    m.opt_g.set_step_count(ck.adam_steps_g);
    if (m.has_d1) {
        NamedParams<float> dp;
        m.d1.collect_params("d1", dp);
        restore_params(dp, "d");
        restore_moments(dp, m.opt_d1, "adam.d");
        m.opt_d1.set_step_count(ck.adam_steps_d1);
    }
    if (m.has_d2) {
        NamedParams<float> dp;
        m.d2.collect_params("d2", dp);
        restore_params(dp, "d");
        restore_moments(dp, m.opt_d2, "adam.d");
        m.opt_d2.set_step_count(ck.adam_steps_d2);
    }
    if (used != ck.tensors.size())
        throw FormatError("checkpoint contains " + std::to_string(ck.tensors.size() - used) +
                          " tensor(s) unknown to this configuration");
}

inline TrainModels models_from_checkpoint(const Checkpoint& ck) {
    RunConfig cfg;
    cfg.apply_text(ck.config_text, "<checkpoint config>");
    TrainModels m = TrainModels::build(cfg);
    apply_checkpoint(m, ck);
    return m;
}

// ---- inference ----

// Enhances one input (sRGB image or packed raw), padding to the stage-1
// granularity and cropping back.
inline Tensor<float> enhance(const Generator<float>& gen, const Tensor<float>& input) {
    NoGradGuard ng;
    const Shape s = input.shape();
    const int ph = (32 - s.h % 32) % 32;
    const int pw = (32 - s.w % 32) % 32;
    Tensor<float> padded = (ph || pw) ? replicate_pad(input, 0, ph, 0, pw) : input;
    Tensor<float> out = gen.forward(padded).final;
    const int scale = gen.cfg.input_mode == InputMode::Raw4 ? 2 : 1;
    if (ph || pw) out = crop_spatial(out, 0, 0, scale * s.h, scale * s.w);
    return out;
}

// Largest centered window with dimensions divisible by `multiple`.
template <typename T>
Tensor<T> center_crop_multiple(const Tensor<T>& t, int multiple) {
    const Shape s = t.shape();
    const int h = (s.h / multiple) * multiple;
    const int w = (s.w / multiple) * multiple;
    if (h < multiple || w < multiple)
        throw DataError("image " + s.str() + " smaller than " + std::to_string(multiple));
    if (h == s.h && w == s.w) return t.detach();
    return crop_spatial(t, (s.h - h) / 2, (s.w - w) / 2, h, w);
}

// ---- the optimization loop ----

struct TrainResult {
    Checkpoint best;
    double best_val_psnr = -std::numeric_limits<double>::infinity();
    int epochs_run = 0;
};

struct ValScore {
    double psnr_db = 0.0, ssim_val = 0.0;
};

inline ValScore evaluate(const Generator<float>& gen, const PairedDataset& val,
                         const std::vector<std::pair<Tensor<float>, Tensor<float>>>* cache) {
    NoGradGuard ng;
    const bool raw = gen.cfg.input_mode == InputMode::Raw4;
    double psum = 0.0, ssum = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
        auto [low, high] = cache ? (*cache)[i] : val.load(i);
        // aligned center crops to the stage-1 granularity
        const Shape ls = low.shape();
        const int lh = (ls.h / 32) * 32, lw = (ls.w / 32) * 32;
        if (lh < 32 || lw < 32) throw DataError("validation image too small: " + ls.str());
        const int oy = (ls.h - lh) / 2, ox = (ls.w - lw) / 2;
        low = crop_spatial(low, oy, ox, lh, lw);
        const int s = raw ? 2 : 1;
        high = crop_spatial(high, s * oy, s * ox, s * lh, s * lw);
        Tensor<float> out = gen.forward(low).final;
        psum += psnr(out, high);
        ssum += ssim(out, high);
    }
    return {psum / double(val.size()), ssum / double(val.size())};
}

namespace detail {

inline std::string csv_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// lossless, so logged validation scores compare exactly against the
// retained checkpoint
inline std::string csv_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// Alternating critic/generator updates with validation-driven best
// checkpoint retention. The log stream (optional) receives one CSV row
// per generator step and one per epoch for validation.
inline TrainResult train(const RunConfig& cfg, const PairedDataset& train_set,
                         const PairedDataset& val_set, std::ostream* log = nullptr) {
    cfg.validate();
    if (train_set.size() == 0 || val_set.size() == 0)
        throw DataError("training needs non-empty train and validation splits");
    CheckedModeGuard checked(cfg.checked_mode);

    TrainModels m = TrainModels::build(cfg);
    const LossWeights weights = cfg.loss_weights();
    const AugmentConfig aug_cfg = cfg.augment_config();
    const InputMode mode = cfg.mode();

    // Desk-scale sets are cached in memory; larger ones are re-read.
    std::vector<std::pair<Tensor<float>, Tensor<float>>> train_cache, val_cache;
    const bool cache_train = train_set.size() <= 64;
    if (cache_train)
        for (std::size_t i = 0; i < train_set.size(); ++i) train_cache.push_back(train_set.load(i));
    const bool cache_val = val_set.size() <= 64;
    if (cache_val)
        for (std::size_t i = 0; i < val_set.size(); ++i) val_cache.push_back(val_set.load(i));

    if (log)
        *log << "epoch,step,l1,ms_ssim,scal,p_adv,f_adv,aux_l1,total,d1_loss,d2_loss,lr,"
                "val_psnr,val_ssim\n";

    TrainResult result;
    result.best = make_checkpoint(m, 0, result.best_val_psnr);
    int global_step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(epoch, cfg.lr0, cfg.lr_decay_factor, cfg.lr_decay_epochs);

        // deterministic per-epoch ordering
        std::vector<std::size_t> order(train_set.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng = Rng::derive(cfg.seed, 0x9d5cu, std::uint64_t(epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
            std::vector<Tensor<float>> lows, highs;
            for (std::size_t bi = start; bi < end; ++bi) {
                const std::size_t idx = order[bi];
                auto [low, high] = cache_train ? train_cache[idx] : train_set.load(idx);
                Rng sample_rng = Rng::derive(cfg.seed, std::uint64_t(epoch) + 1, idx);
                auto [lc, hc] = random_crop_pair(low, high, cfg.crop, mode, sample_rng);
                if (cfg.augment_enabled) {
                    auto [la, ha] = augment(lc, hc, sample_rng, aug_cfg);
                    lc = la;
                    hc = ha;
                }
                lows.push_back(lc);
                highs.push_back(hc);
            }
            Tensor<float> low_batch = batch_concat(lows);
            Tensor<float> high_batch = batch_concat(highs);

            auto out = m.gen.forward(low_batch);
            Tensor<float> fake = out.final;
            Tensor<float> fake_detached = fake.detach();

            double d1_loss = 0.0, d2_loss = 0.0;
            if (m.has_d1) {
                m.opt_d1.zero_grad();
                Tensor<float> dl =
                    lsgan_d_loss(m.d1.forward(high_batch), m.d1.forward(fake_detached));
                d1_loss = double(scalar_value(dl));
                dl.backward();
                m.opt_d1.step(lr);
            }
            if (m.has_d2) {
                m.opt_d2.zero_grad();
                Tensor<float> dl =
                    lsgan_d_loss(m.d2.forward(high_batch), m.d2.forward(fake_detached));
                d2_loss = double(scalar_value(dl));
                dl.backward();
                m.opt_d2.step(lr);
            }

            m.opt_g.zero_grad();
            GeneratorLossInputs<float> gin;
            gin.pred = fake;
            gin.target = high_batch;
            if (weights.p_adv > 0.0) gin.patch_fake_scores = m.d1.forward(fake);
            if (weights.f_adv > 0.0) gin.fourier_fake_scores = m.d2.forward(fake);
            if (weights.scal > 0.0) {
                auto features = [&](const Tensor<float>& img) {
                    return cfg.scal_source == "fourier"
                               ? m.d2.forward_with_features(img).features
                               : m.d1.forward_with_features(img).features;
                };
                Tensor<float> anchor = features(fake);
                Tensor<float> positive, negative;
                {
                    NoGradGuard ng;  // constants with respect to the generator
                    positive = features(high_batch);
                    Tensor<float> neg_img =
                        mode == InputMode::Raw4 ? raw_preview_rgb(low_batch) : low_batch;
                    negative = features(neg_img);
                }
                gin.scal_features = {anchor, positive, negative};
            }
            LossBreakdown<float> bd =
                total_generator_loss(gin, weights, cfg.msssim_levels, float(cfg.scal_tau));

            double aux_l1 = 0.0;
            Tensor<float> total_graph = bd.graph;
            if (cfg.stage1_aux_l1 && !cfg.single_stage && mode == InputMode::Srgb3) {
                Tensor<float> aux = l1_loss(out.balanced, high_batch);
                aux_l1 = double(scalar_value(aux));
                total_graph = add(total_graph, mul_scalar(aux, float(weights.l1)));
            }
            const double total = bd.total + weights.l1 * aux_l1;
            if (!std::isfinite(total))
                throw NumericError("non-finite generator loss at epoch " + std::to_string(epoch) +
                                   " step " + std::to_string(global_step));
            total_graph.backward();
            m.opt_g.step(lr);

            if (log) {
                using detail::csv_num;
                *log << epoch << ',' << global_step << ',' << csv_num(bd.l1) << ','
                     << csv_num(bd.ms_ssim) << ',' << csv_num(bd.scal) << ','
                     << csv_num(bd.p_adv) << ',' << csv_num(bd.f_adv) << ',' << csv_num(aux_l1)
                     << ',' << csv_num(total) << ',' << csv_num(d1_loss) << ','
                     << csv_num(d2_loss) << ',' << csv_num(lr) << ",,\n";
            }
            ++global_step;
        }

        const ValScore score = evaluate(m.gen, val_set, cache_val ? &val_cache : nullptr);
        if (log) {
            *log << epoch << ",-1,,,,,,,,,," << detail::csv_num(lr) << ','
                 << detail::csv_exact(score.psnr_db) << ',' << detail::csv_exact(score.ssim_val)
                 << "\n";
        }
        if (score.psnr_db > result.best_val_psnr) {
            result.best_val_psnr = score.psnr_db;
            result.best = make_checkpoint(m, epoch, score.psnr_db);
        }
        result.epochs_run = epoch + 1;
    }
    return result;
}

}  // namespace afnet
