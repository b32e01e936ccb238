// Command-line front end: training, inference, frequency analysis and
// compute accounting over the afnet library.

#include <CLI11.hpp>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "afnet/config.hpp"
#include "afnet/macs.hpp"
#include "afnet/metrics.hpp"
#include "afnet/train.hpp"

namespace fs = std::filesystem;
using namespace afnet;

namespace {

std::string csv_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// All outputs of a command land in a staging directory that is renamed
// into place only on success. The staging name carries the pid so
// concurrent invocations aimed at the same target cannot clobber each
// other mid-run; the later commit wins.
class StagedDir {
public:
    explicit StagedDir(std::string final_path)
        : final_(std::move(final_path)),
          staging_(final_ + ".staging." + std::to_string(::getpid())) {
        if (fs::exists(staging_)) fs::remove_all(staging_);
        fs::create_directories(staging_);
    }
    ~StagedDir() {
        if (!committed_ && fs::exists(staging_)) {
            std::error_code ec;
            fs::remove_all(staging_, ec);
        }
    }
    const std::string& path() const { return staging_; }
    std::string file(const std::string& name) const { return (fs::path(staging_) / name).string(); }
    void commit() {
        if (fs::exists(final_)) fs::remove_all(final_);
        fs::rename(staging_, final_);
        committed_ = true;
    }

private:
    std::string final_, staging_;
    bool committed_ = false;
};

struct ConfigCli {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "key = value configuration file");
        for (const auto& key : RunConfig::keys()) {
            const std::string name = "--" + key.name;
            app->add_option_function<std::string>(
                name,
                [this, key_name = key.name](const std::string& v) {
                    overrides.emplace_back(key_name, v);
                },
                "config key " + key.name);
        }
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_path.empty()) cfg.load_file(config_path);
        for (const auto& [k, v] : overrides) cfg.set(k, v);
        if (const char* env_seed = std::getenv("AFNET_SEED")) cfg.set("seed", env_seed);
        cfg.validate();
        return cfg;
    }
};

// <root>/train and <root>/val when present, otherwise the root serves as
// both splits.
std::pair<PairedDataset, PairedDataset> load_splits(const std::string& root, InputMode mode,
                                                    double raw_gain) {
    if (fs::is_directory(fs::path(root) / "train")) {
        const std::string val_dir = (fs::path(root) / "val").string();
        if (!fs::is_directory(val_dir))
            throw DataError(root + " has a train/ split but no val/ split");
        return {PairedDataset::scan((fs::path(root) / "train").string(), mode, raw_gain),
                PairedDataset::scan(val_dir, mode, raw_gain)};
    }
    PairedDataset both = PairedDataset::scan(root, mode, raw_gain);
    return {both, both};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    out << text;
}

int cmd_train(const ConfigCli& cc, const std::string& data_root, const std::string& out_dir) {
    const RunConfig cfg = cc.resolve();
    auto [train_set, val_set] = load_splits(data_root, cfg.mode(), cfg.raw_gain);
    StagedDir out(out_dir);
    std::ostringstream log;
    TrainResult result = train(cfg, train_set, val_set, &log);
    result.best.save(out.file("best.ckpt"));
    write_text(out.file("log.csv"), log.str());
    write_text(out.file("resolved.cfg"), cfg.resolved_text());
    out.commit();
    std::printf("trained %d epoch(s); best validation PSNR %s dB\n", result.epochs_run,
                csv_num(result.best_val_psnr).c_str());
    return 0;
}

int cmd_enhance(const std::string& ckpt_path, const std::string& input,
                const std::string& out_dir, const std::string& mode_flag) {
    const Checkpoint ck = Checkpoint::load(ckpt_path);
    TrainModels models = models_from_checkpoint(ck);
    const InputMode mode = models.cfg.mode();
    if (!mode_flag.empty() && input_mode_from_string(mode_flag) != mode)
        throw ConfigError("requested mode " + mode_flag + " but checkpoint was trained as " +
                          models.cfg.input_mode);

    std::vector<fs::path> inputs;
    if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input))
            if (e.is_regular_file() && e.path().extension() == ".png") inputs.push_back(e.path());
        std::sort(inputs.begin(), inputs.end());
        if (inputs.empty()) throw DataError(input + " contains no .png inputs");
    } else if (fs::exists(input)) {
        inputs.push_back(input);
    } else {
        throw DataError("input " + input + " does not exist");
    }

    StagedDir out(out_dir);
    for (const auto& p : inputs) {
        Tensor<float> in_tensor;
        if (mode == InputMode::Raw4) {
            fs::path sidecar = p;
            sidecar.replace_extension(".txt");
            const BayerMosaic m = load_mosaic(p.string(), sidecar.string());
            in_tensor = pack_raw<float>(m, models.cfg.raw_gain);
        } else {
            in_tensor = load_image<float>(p.string());
            if (in_tensor.shape().c != 3) throw DataError(p.string() + ": expected an RGB image");
        }
        Tensor<float> enhanced = enhance(models.gen, in_tensor);
        save_image(enhanced, out.file(p.stem().string() + ".png"));
    }
    write_text(out.file("resolved.cfg"), models.cfg.resolved_text());
    out.commit();
    std::printf("enhanced %zu image(s) into %s\n", inputs.size(), out_dir.c_str());
    return 0;
}

std::vector<std::pair<fs::path, fs::path>> matched_pairs(const std::string& pred_dir,
                                                         const std::string& gt_dir) {
    std::vector<std::pair<fs::path, fs::path>> pairs;
    std::vector<fs::path> preds;
    for (const auto& e : fs::directory_iterator(pred_dir))
        if (e.is_regular_file() && e.path().extension() == ".png") preds.push_back(e.path());
    std::sort(preds.begin(), preds.end());
    if (preds.empty()) throw DataError(pred_dir + " contains no .png files");
    for (const auto& p : preds) {
        const fs::path gt = fs::path(gt_dir) / p.filename();
        if (!fs::exists(gt)) throw DataError("no ground truth for " + p.filename().string());
        pairs.emplace_back(p, gt);
    }
    return pairs;
}

int cmd_analyze_metrics(const std::string& pred_dir, const std::string& gt_dir,
                        const std::string& out_file, int msssim_levels) {
    std::ostringstream csv;
    csv << "name,psnr,ssim,ms_ssim\n";
    double psum = 0, ssum = 0, msum = 0;
    const auto pairs = matched_pairs(pred_dir, gt_dir);
    for (const auto& [p, gt] : pairs) {
        const Tensor<float> a = load_image<float>(p.string());
        const Tensor<float> b = load_image<float>(gt.string());
        const double pv = psnr(a, b);
        const double sv = ssim(a, b);
        const double mv = ms_ssim_metric(a, b, msssim_levels);
        csv << p.stem().string() << ',' << csv_num(pv) << ',' << csv_num(sv) << ','
            << csv_num(mv) << "\n";
        psum += pv;
        ssum += sv;
        msum += mv;
    }
    const double n = double(pairs.size());
    csv << "mean," << csv_num(psum / n) << ',' << csv_num(ssum / n) << ',' << csv_num(msum / n)
        << "\n";
    if (out_file.empty())
        std::cout << csv.str();
    else
        write_text(out_file, csv.str());
    return 0;
}

int cmd_analyze_psd(const std::vector<std::string>& images, const std::string& out_file) {
    std::ostringstream csv;
    csv << "image,frequency,log_power\n";
    for (const auto& path : images) {
        const Tensor<float> img = load_image<float>(path);
        const PSDCurve curve = psd_curve(img);
        const std::string name = fs::path(path).stem().string();
        for (std::size_t i = 0; i < curve.bins(); ++i)
            csv << name << ',' << csv_num(curve.frequency[i]) << ','
                << csv_num(curve.log_power[i]) << "\n";
    }
    if (out_file.empty())
        std::cout << csv.str();
    else
        write_text(out_file, csv.str());
    return 0;
}

int cmd_analyze_fft(const std::string& a_path, const std::string& b_path,
                    const std::string& out_dir) {
    StagedDir out(out_dir);
    auto dump = [&](const std::string& path, const char* tag) {
        Tensor<float> img = load_image<float>(path);
        if (img.shape().c != 3) throw DataError(path + ": expected an RGB image");
        auto [mag, phase] = fourier_features(img, SpectrumSource::Gray);
        save_image(mag, out.file(std::string(tag) + "_magnitude.png"));
        // phase is in [-1,1]; remap for display
        Tensor<float> pv = Tensor<float>::zeros(phase.shape());
        for (std::size_t i = 0; i < phase.numel(); ++i)
            pv.data()[i] = 0.5f * (phase.data()[i] + 1.0f);
        save_image(pv, out.file(std::string(tag) + "_phase.png"));
        return img;
    };
    Tensor<float> a = dump(a_path, "a");
    if (!b_path.empty()) {
        Tensor<float> b = dump(b_path, "b");
        FftDiff<float> diff = fft_diff_heatmap(a, b);
        save_heatmap(diff.magnitude, out.file("diff_magnitude.png"));
        save_heatmap(diff.phase, out.file("diff_phase.png"));
    }
    out.commit();
    return 0;
}

int cmd_analyze_gmacs(const ConfigCli& cc, int res) {
    const RunConfig cfg = cc.resolve();
    if (res % 32 != 0) throw ConfigError("--res must be a multiple of 32");
    const MacReport report = count_macs(cfg.generator_config(), res, res);
    std::cout << report.text();
    return 0;
}

struct AblationRow {
    std::string label;
    // deltas applied on top of the base config
    std::vector<std::pair<std::string, std::string>> settings;
};

const std::vector<AblationRow>& ablation_ladder() {
    static const std::vector<AblationRow> rows = {
        {"Single Stage",
         {{"single_stage", "true"}, {"use_cmsfe_a", "false"}, {"use_patch_gan", "false"},
          {"use_fourier_gan", "false"}}},
        {"Two Stage w 1x RDB",
         {{"rdb_count", "1"}, {"use_cmsfe_a", "false"}, {"use_patch_gan", "false"},
          {"use_fourier_gan", "false"}}},
        {"w 3x RDB",
         {{"rdb_count", "3"}, {"use_cmsfe_a", "false"}, {"use_patch_gan", "false"},
          {"use_fourier_gan", "false"}}},
        {"w 5x RDB",
         {{"rdb_count", "5"}, {"use_cmsfe_a", "false"}, {"use_patch_gan", "false"},
          {"use_fourier_gan", "false"}}},
        {"w 7x RDB",
         {{"rdb_count", "7"}, {"use_cmsfe_a", "false"}, {"use_patch_gan", "false"},
          {"use_fourier_gan", "false"}}},
        {"Two Stage w 7x RDB + cMSFE-A",
         {{"rdb_count", "7"}, {"use_cmsfe_a", "true"}, {"use_patch_gan", "false"},
          {"use_fourier_gan", "false"}}},
        {"+ Patch GAN",
         {{"rdb_count", "7"}, {"use_cmsfe_a", "true"}, {"use_patch_gan", "true"},
          {"use_fourier_gan", "false"}}},
        {"+ Fourier GAN (RGB)",
         {{"rdb_count", "7"}, {"use_cmsfe_a", "true"}, {"use_patch_gan", "true"},
          {"use_fourier_gan", "true"}, {"spectrum_source", "per_rgb_channel"}}},
        {"AFNet (+ Fourier GAN (Gray))",
         {{"rdb_count", "7"}, {"use_cmsfe_a", "true"}, {"use_patch_gan", "true"},
          {"use_fourier_gan", "true"}, {"spectrum_source", "gray"}}},
    };
    return rows;
}

int cmd_ablate(const ConfigCli& cc, const std::string& data_root, const std::string& out_dir) {
    const RunConfig base = cc.resolve();
    auto [train_set, val_set] = load_splits(data_root, base.mode(), base.raw_gain);
    StagedDir out(out_dir);
    std::ostringstream csv;
    csv << "config,psnr,ssim,gmacs\n";
    for (const auto& row : ablation_ladder()) {
        RunConfig cfg = base;
        for (const auto& [k, v] : row.settings) cfg.set(k, v);
        cfg.validate();
        TrainResult result = train(cfg, train_set, val_set, nullptr);
        TrainModels best = models_from_checkpoint(result.best);
        const ValScore score = evaluate(best.gen, val_set, nullptr);
        const double gmacs = count_macs(cfg.generator_config(), cfg.crop, cfg.crop).gmacs();
        csv << '"' << row.label << "\"," << csv_num(score.psnr_db) << ','
            << csv_num(score.ssim_val) << ',' << csv_num(gmacs) << "\n";
    }
    csv.flush();
    write_text(out.file("ablation.csv"), csv.str());
    write_text(out.file("resolved.cfg"), base.resolved_text());
    out.commit();
    std::printf("ablation ladder written to %s\n", out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-stage low-light enhancement with a Fourier-spectrum adversarial objective"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model on a paired dataset");
    ConfigCli train_cfg;
    std::string data_root, out_dir;
    train_cfg.attach(train_cmd);
    train_cmd->add_option("--data", data_root, "dataset root (low/ + high/, or train/ + val/)")
        ->required();
    train_cmd->add_option("--out", out_dir, "output directory")->required();

    // enhance
    auto* enhance_cmd = app.add_subcommand("enhance", "enhance images with a trained checkpoint");
    std::string ckpt_path, input_path, enhance_out, mode_flag;
    enhance_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    enhance_cmd->add_option("--input", input_path, "input image or directory")->required();
    enhance_cmd->add_option("--out", enhance_out, "output directory")->required();
    enhance_cmd->add_option("--mode", mode_flag, "expected input mode (srgb3|raw4)");

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "metrics, spectra and compute accounting");
    analyze_cmd->require_subcommand(1);
    auto* metrics_cmd = analyze_cmd->add_subcommand("metrics", "PSNR/SSIM/MS-SSIM over pairs");
    std::string pred_dir, gt_dir, metrics_out;
    int metrics_levels = 3;
    metrics_cmd->add_option("--pred", pred_dir, "predictions directory")->required();
    metrics_cmd->add_option("--gt", gt_dir, "ground-truth directory")->required();
    metrics_cmd->add_option("--out", metrics_out, "CSV output file (default: stdout)");
    metrics_cmd->add_option("--msssim_levels", metrics_levels, "MS-SSIM pyramid levels");

    auto* psd_cmd = analyze_cmd->add_subcommand("psd", "radially averaged PSD curves");
    std::vector<std::string> psd_images;
    std::string psd_out;
    psd_cmd->add_option("images", psd_images, "input images")->required();
    psd_cmd->add_option("--out", psd_out, "CSV output file (default: stdout)");

    auto* fft_cmd = analyze_cmd->add_subcommand("fft", "magnitude/phase planes and heatmaps");
    std::string fft_a, fft_b, fft_out;
    fft_cmd->add_option("--a", fft_a, "first image")->required();
    fft_cmd->add_option("--b", fft_b, "second image (enables difference heatmaps)");
    fft_cmd->add_option("--out", fft_out, "output directory")->required();

    auto* gmacs_cmd = analyze_cmd->add_subcommand("gmacs", "per-layer MAC accounting");
    ConfigCli gmacs_cfg;
    int gmacs_res = 256;
    gmacs_cfg.attach(gmacs_cmd);
    gmacs_cmd->add_option("--res", gmacs_res, "square input resolution");

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "run the architecture/objective ladder");
    ConfigCli ablate_cfg;
    std::string ablate_data, ablate_out;
    ablate_cfg.attach(ablate_cmd);
    ablate_cmd->add_option("--data", ablate_data, "dataset root")->required();
    ablate_cmd->add_option("--out", ablate_out, "output directory")->required();

    try {
        app.parse(argc, argv);
        if (*train_cmd) return cmd_train(train_cfg, data_root, out_dir);
        if (*enhance_cmd) return cmd_enhance(ckpt_path, input_path, enhance_out, mode_flag);
        if (*metrics_cmd) return cmd_analyze_metrics(pred_dir, gt_dir, metrics_out, metrics_levels);
        if (*psd_cmd) return cmd_analyze_psd(psd_images, psd_out);
        if (*fft_cmd) return cmd_analyze_fft(fft_a, fft_b, fft_out);
        if (*gmacs_cmd) return cmd_analyze_gmacs(gmacs_cfg, gmacs_res);
        if (*ablate_cmd) return cmd_ablate(ablate_cfg, ablate_data, ablate_out);
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 1 : 0;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
