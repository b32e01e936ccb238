#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "afnet/config.hpp"
#include "afnet/macs.hpp"
#include "afnet/metrics.hpp"
#include "afnet/train.hpp"

using namespace afnet;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("afnet_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(AFNET_BIN_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool staging_left_behind(const std::string& out_path) {
    const fs::path target(out_path);
    if (!fs::is_directory(target.parent_path())) return false;
    const std::string prefix = target.filename().string() + ".staging";
    for (const auto& e : fs::directory_iterator(target.parent_path()))
        if (e.path().filename().string().rfind(prefix, 0) == 0) return true;
    return false;
}

std::string run_cli_stdout(const std::string& args) {
    const std::string out_file = temp_dir("stdout") + "/out.txt";
    const std::string cmd = std::string(AFNET_BIN_PATH) + " " + args + " > " + out_file + " 2>/dev/null";
    EXPECT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0) << args;
    return read_file(out_file);
}

Tensor<float> scene(int size, std::uint64_t seed) {
    Rng rng(seed);
    auto coarse = Tensor<float>::uniform(Shape(1, 3, size / 8, size / 8), rng, 0.2f, 0.9f);
    return bicubic_resample(coarse, Scale::up(8));
}

std::string write_dataset(const std::string& name, int count, int size) {
    const std::string root = temp_dir(name);
    fs::create_directories(root + "/low");
    fs::create_directories(root + "/high");
    for (int i = 0; i < count; ++i) {
        auto gt = scene(size, 100 + i);
        auto low = gt.detach();
        for (auto& v : low.data()) v = std::clamp(0.4f * std::pow(v, 2.2f), 0.f, 1.f);
        char fn[32];
        std::snprintf(fn, sizeof(fn), "img%02d.png", i);
        save_image(gt, root + "/high/" + fn);
        save_image(low, root + "/low/" + fn);
    }
    return root;
}

std::string tiny_cfg_file(const std::string& dir) {
    const std::string path = dir + "/tiny.cfg";
    std::ofstream out(path);
    out << "# desk-scale settings\n"
        << "seed = 3\n"
        << "epochs = 1\n"
        << "batch_size = 2\n"
        << "crop = 32\n"
        << "base_channels = 8\n"
        << "rdb_count = 1\n"
        << "rdb_layers = 2\n"
        << "rdb_growth = 8\n"
        << "block_channels = 16\n"
        << "disc_base_width = 8\n"
        << "disc_stride2_layers = 3\n"
        << "msssim_levels = 1\n"
        << "augment = false\n";
    return path;
}

}  // namespace

TEST(RunConfig, DefaultsMatchTheObjective) {
    RunConfig cfg;
    EXPECT_DOUBLE_EQ(cfg.lambda_l1, 1.0);
    EXPECT_DOUBLE_EQ(cfg.lambda_ms_ssim, 1.0);
    EXPECT_DOUBLE_EQ(cfg.lambda_scal, 0.01);
    EXPECT_DOUBLE_EQ(cfg.lambda_p_adv, 0.5);
    EXPECT_DOUBLE_EQ(cfg.lambda_f_adv, 0.5);
    EXPECT_DOUBLE_EQ(cfg.lr0, 1e-4);
    EXPECT_EQ(cfg.epochs, 1000);
    EXPECT_EQ(cfg.lr_decay_epochs, 200);
    EXPECT_DOUBLE_EQ(cfg.lr_decay_factor, 0.5);
    EXPECT_EQ(cfg.crop, 256);
    EXPECT_EQ(cfg.rdb_count, 7);
    EXPECT_EQ(cfg.spectrum_source, "gray");
    EXPECT_NO_THROW(cfg.validate());
}

TEST(RunConfig, ParseRejectsUnknownKeysAndBadValues) {
    RunConfig cfg;
    EXPECT_THROW(cfg.set("not_a_key", "1"), ConfigError);
    EXPECT_THROW(cfg.set("epochs", "many"), ConfigError);
    EXPECT_THROW(cfg.apply_text("epochs 5\n"), ConfigError);  // missing '='
    EXPECT_NO_THROW(cfg.apply_text("# comment only\n\nepochs = 5\n"));
    EXPECT_EQ(cfg.epochs, 5);
}

TEST(RunConfig, ResolvedSnapshotRoundTrips) {
    RunConfig cfg;
    cfg.set("base_channels", "12");
    cfg.set("lambda_scal", "0.25");
    cfg.set("spectrum_source", "per_rgb_channel");
    RunConfig back;
    back.apply_text(cfg.resolved_text());
    EXPECT_EQ(back.resolved_text(), cfg.resolved_text());
    EXPECT_EQ(back.base_channels, 12);
    EXPECT_DOUBLE_EQ(back.lambda_scal, 0.25);
}

TEST(RunConfig, ValidationCatchesContractViolations) {
    RunConfig cfg;
    cfg.crop = 100;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.lambda_l1 = -1;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.input_mode = "raw4";
    cfg.crop = 96;  // not divisible by 64
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.crop = 128;
    EXPECT_NO_THROW(cfg.validate());
    cfg = RunConfig{};
    cfg.cmsfe_kernels = "1,3";
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.scal_source = "vgg";
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RunConfig, ScalRequiresItsSourceCritic) {
    RunConfig cfg;
    cfg.use_patch_gan = false;
    EXPECT_DOUBLE_EQ(cfg.loss_weights().scal, 0.0);  // patch features unavailable
    cfg.use_patch_gan = true;
    cfg.scal_source = "fourier";
    cfg.use_fourier_gan = false;
    EXPECT_DOUBLE_EQ(cfg.loss_weights().scal, 0.0);
    cfg.use_fourier_gan = true;
    EXPECT_DOUBLE_EQ(cfg.loss_weights().scal, 0.01);
}

TEST(Cli, TrainProducesRunArtifacts) {
    const std::string data = write_dataset("train_data", 2, 32);
    const std::string dir = temp_dir("train_out");
    const std::string cfg = tiny_cfg_file(dir);
    const std::string out = dir + "/run1";
    ASSERT_EQ(run_cli("train --config " + cfg + " --data " + data + " --out " + out), 0);
    EXPECT_TRUE(fs::exists(out + "/best.ckpt"));
    EXPECT_TRUE(fs::exists(out + "/log.csv"));
    EXPECT_TRUE(fs::exists(out + "/resolved.cfg"));
    EXPECT_FALSE(fs::exists(out + ".staging"));
    // resolved snapshot is a fully parsable config
    RunConfig parsed;
    parsed.apply_text(read_file(out + "/resolved.cfg"));
    EXPECT_EQ(parsed.epochs, 1);
}

TEST(Cli, ZeroEpochTrainWritesInitializedCheckpoint) {
    const std::string data = write_dataset("zeroep_data", 1, 32);
    const std::string dir = temp_dir("zeroep_out");
    const std::string cfg = tiny_cfg_file(dir);
    const std::string out = dir + "/run0";
    ASSERT_EQ(run_cli("train --config " + cfg + " --epochs 0 --data " + data + " --out " + out),
              0);
    Checkpoint ck = Checkpoint::load(out + "/best.ckpt");
    EXPECT_EQ(ck.epoch, 0);
    EXPECT_EQ(ck.adam_steps_g, 0);
}

TEST(Cli, FlagsOverrideConfigAndSeedEnvWins) {
    const std::string data = write_dataset("flag_data", 1, 32);
    const std::string dir = temp_dir("flag_out");
    const std::string cfg = tiny_cfg_file(dir);
    const std::string out = dir + "/run";
    const std::string cmd = "AFNET_SEED=99 " + std::string(AFNET_BIN_PATH) + " train --config " +
                            cfg + " --seed 5 --epochs 0 --data " + data + " --out " + out +
                            " >/dev/null 2>&1";
    ASSERT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
    RunConfig parsed;
    parsed.apply_text(read_file(out + "/resolved.cfg"));
    EXPECT_EQ(parsed.seed, 99u);
    EXPECT_EQ(parsed.epochs, 0);
}

TEST(Cli, EnhanceIsIdempotentAndShapePreserving) {
    const std::string data = write_dataset("enh_data", 1, 32);
    const std::string dir = temp_dir("enh_out");
    const std::string cfg = tiny_cfg_file(dir);
    const std::string run = dir + "/run";
    ASSERT_EQ(run_cli("train --config " + cfg + " --epochs 0 --data " + data + " --out " + run),
              0);
    ASSERT_EQ(run_cli("enhance --checkpoint " + run + "/best.ckpt --input " + data +
                      "/low --out " + dir + "/e1"),
              0);
    ASSERT_EQ(run_cli("enhance --checkpoint " + run + "/best.ckpt --input " + data +
                      "/low --out " + dir + "/e2"),
              0);
    const std::string f1 = dir + "/e1/img00.png";
    ASSERT_TRUE(fs::exists(f1));
    EXPECT_EQ(read_file(f1), read_file(dir + "/e2/img00.png"));
    auto img = load_image<float>(f1);
    EXPECT_EQ(img.shape(), Shape(1, 3, 32, 32));
    // mode mismatch is a usage error
    EXPECT_EQ(run_cli("enhance --checkpoint " + run + "/best.ckpt --input " + data +
                      "/low --out " + dir + "/e3 --mode raw4"),
              1);
}

TEST(Cli, AnalyzeMetricsOnIdenticalFolders) {
    const std::string data = write_dataset("met_data", 2, 64);
    const std::string out = run_cli_stdout("analyze metrics --pred " + data + "/high --gt " +
                                           data + "/high --msssim_levels 1");
    EXPECT_NE(out.find("name,psnr,ssim,ms_ssim"), std::string::npos);
    EXPECT_NE(out.find("inf,1,1"), std::string::npos);
    EXPECT_NE(out.find("mean,"), std::string::npos);
}

TEST(Cli, AnalyzePsdBinCount) {
    const std::string data = write_dataset("psd_data", 1, 64);
    const std::string out = run_cli_stdout("analyze psd " + data + "/high/img00.png");
    // header + 32 bins for a 64x64 image
    int lines = 0;
    for (char c : out) lines += c == '\n';
    EXPECT_EQ(lines, 1 + 32);
}

TEST(Cli, AnalyzeFftWritesPlanesAndHeatmaps) {
    const std::string data = write_dataset("fft_data", 1, 32);
    const std::string dir = temp_dir("fft_out");
    ASSERT_EQ(run_cli("analyze fft --a " + data + "/low/img00.png --b " + data +
                      "/high/img00.png --out " + dir + "/fft"),
              0);
    for (const char* f : {"a_magnitude.png", "a_phase.png", "b_magnitude.png", "b_phase.png",
                          "diff_magnitude.png", "diff_phase.png"})
        EXPECT_TRUE(fs::exists(dir + "/fft/" + f)) << f;
}

TEST(Cli, GmacsMatchesLibraryCount) {
    const std::string dir = temp_dir("gmacs");
    const std::string cfg = tiny_cfg_file(dir);
    const std::string out = run_cli_stdout("analyze gmacs --config " + cfg + " --res 64");
    RunConfig rc;
    rc.load_file(cfg);
    const MacReport want = count_macs(rc.generator_config(), 64, 64);
    EXPECT_NE(out.find(std::to_string(want.total())), std::string::npos);
}

TEST(Cli, RawModeEnhanceEndToEnd) {
    const std::string dir = temp_dir("raw_cli");
    fs::create_directories(dir + "/data/low");
    fs::create_directories(dir + "/data/high");
    BayerMosaic m;
    m.height = m.width = 64;
    m.cfa = CfaPattern::RGGB;
    m.data.assign(64 * 64, 0);
    Rng rng(9);
    for (auto& v : m.data) v = std::uint16_t(600 + rng.below(14000));
    save_mosaic(m, dir + "/data/low/shot.png", dir + "/data/low/shot.txt");
    save_image(scene(64, 7), dir + "/data/high/shot.png");

    const std::string cfg = tiny_cfg_file(dir);
    ASSERT_EQ(run_cli("train --config " + cfg + " --input_mode raw4 --crop 64 --epochs 0 "
                      "--data " + dir + "/data --out " + dir + "/run"),
              0);
    ASSERT_EQ(run_cli("enhance --checkpoint " + dir + "/run/best.ckpt --input " + dir +
                      "/data/low --out " + dir + "/out --mode raw4"),
              0);
    // H x W mosaic -> H x W RGB (packing halves, bicubic doubles)
    auto img = load_image<float>(dir + "/out/shot.png");
    EXPECT_EQ(img.shape(), Shape(1, 3, 64, 64));
}

TEST(Cli, ExitCodesFollowErrorClasses) {
    const std::string dir = temp_dir("exit");
    const std::string cfg = tiny_cfg_file(dir);
    EXPECT_EQ(run_cli("train --config " + cfg + " --data /does/not/exist --out " + dir + "/x"),
              2);  // data error
    EXPECT_FALSE(fs::exists(dir + "/x"));  // failed commands leave no output directory
    EXPECT_FALSE(fs::exists(dir + "/x.staging"));
    EXPECT_EQ(run_cli("train --bogus-flag 1 --data d --out o"), 1);  // usage
    EXPECT_EQ(run_cli("analyze gmacs --config " + dir + "/missing.cfg"), 1);  // config usage
    EXPECT_EQ(run_cli("enhance --checkpoint " + dir + "/none.ckpt --input x --out y"),
              2);  // format error
    const std::string data = write_dataset("exit_data", 1, 32);
    EXPECT_EQ(run_cli("train --config " + cfg + " --crop 100 --data " + data + " --out " + dir +
                      "/y"),
              1);  // invalid config value
}

TEST(Cli, AblateProducesNineOrderedRows) {
    const std::string data = write_dataset("abl_data", 2, 32);
    const std::string dir = temp_dir("abl_out");
    const std::string cfg = tiny_cfg_file(dir);
    const std::string out = dir + "/ladder";
    ASSERT_EQ(run_cli("ablate --config " + cfg + " --data " + data + " --out " + out), 0);
    const std::string csv = read_file(out + "/ablation.csv");
    EXPECT_NE(csv.find("config,psnr,ssim,gmacs"), std::string::npos);
    for (const char* label :
         {"Single Stage", "Two Stage w 1x RDB", "w 3x RDB", "w 5x RDB", "w 7x RDB",
          "Two Stage w 7x RDB + cMSFE-A", "+ Patch GAN", "+ Fourier GAN (RGB)",
          "AFNet (+ Fourier GAN (Gray))"})
        EXPECT_NE(csv.find(label), std::string::npos) << label;
    int lines = 0;
    for (char c : csv) lines += c == '\n';
    EXPECT_EQ(lines, 10);  // header + 9 rows

    // GAN rows report the same inference cost
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> gmacs;
    while (std::getline(in, line)) gmacs.push_back(line.substr(line.rfind(',') + 1));
    ASSERT_EQ(gmacs.size(), 9u);
    EXPECT_EQ(gmacs[5], gmacs[6]);
    EXPECT_EQ(gmacs[6], gmacs[7]);
    EXPECT_EQ(gmacs[7], gmacs[8]);

    // byte-identical on re-run with the same seed
    ASSERT_EQ(run_cli("ablate --config " + cfg + " --data " + data + " --out " + out + "_b"), 0);
    EXPECT_EQ(csv, read_file(out + "_b/ablation.csv"));
}
