#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "afnet/image.hpp"
#include "afnet/tensor.hpp"

namespace afnet {

enum class CfaPattern { RGGB, BGGR, GRBG, GBRG };

inline CfaPattern cfa_from_string(const std::string& s) {
    if (s == "RGGB" || s == "rggb") return CfaPattern::RGGB;
    if (s == "BGGR" || s == "bggr") return CfaPattern::BGGR;
    if (s == "GRBG" || s == "grbg") return CfaPattern::GRBG;
    if (s == "GBRG" || s == "gbrg") return CfaPattern::GBRG;
    throw FormatError("unknown cfa_pattern '" + s + "'");
}

inline const char* to_string(CfaPattern p) {
    switch (p) {
        case CfaPattern::RGGB: return "RGGB";
        case CfaPattern::BGGR: return "BGGR";
        case CfaPattern::GRBG: return "GRBG";
        case CfaPattern::GBRG: return "GBRG";
    }
    return "?";
}

// One RAW sensor frame: CFA mosaic plus its normalization levels.
// Defaults follow the 14-bit sensor convention.
struct BayerMosaic {
    int height = 0, width = 0;
    std::vector<std::uint16_t> data;  // row-major
    CfaPattern cfa = CfaPattern::RGGB;
    int black_level = 512;
    int white_level = 16383;

    std::uint16_t at(int y, int x) const { return data[std::size_t(y) * width + x]; }

    void validate() const {
        if (height % 2 != 0 || width % 2 != 0)
            throw DimensionError("mosaic dimensions must be even");
        if (data.size() != std::size_t(height) * width)
            throw DimensionError("mosaic data size mismatch");
        if (black_level < 0 || black_level >= white_level || white_level > 65535)
            throw ParameterError("mosaic levels must satisfy 0 <= black < white <= 65535");
    }
};

namespace detail {

// Position of each output channel (R, G1, B, G2) inside the 2x2 CFA cell.
// G1 is the green sharing a row with R, G2 the green sharing a row with B.
inline void cfa_offsets(CfaPattern p, int off[4][2]) {
    switch (p) {
        case CfaPattern::RGGB: off[0][0] = 0; off[0][1] = 0; off[1][0] = 0; off[1][1] = 1;
                               off[2][0] = 1; off[2][1] = 1; off[3][0] = 1; off[3][1] = 0; break;
        case CfaPattern::BGGR: off[0][0] = 1; off[0][1] = 1; off[1][0] = 1; off[1][1] = 0;
                               off[2][0] = 0; off[2][1] = 0; off[3][0] = 0; off[3][1] = 1; break;
        case CfaPattern::GRBG: off[0][0] = 0; off[0][1] = 1; off[1][0] = 0; off[1][1] = 0;
                               off[2][0] = 1; off[2][1] = 0; off[3][0] = 1; off[3][1] = 1; break;
        case CfaPattern::GBRG: off[0][0] = 1; off[0][1] = 0; off[1][0] = 1; off[1][1] = 1;
                               off[2][0] = 0; off[2][1] = 1; off[3][0] = 0; off[3][1] = 0; break;
    }
}

}  // namespace detail

// Half-resolution 4-channel packing in (R, G1, B, G2) order, normalized to
// [0,1] by the black/white levels. `gain` scales before the clamp.
template <typename T = float>
Tensor<T> pack_raw(const BayerMosaic& m, double gain = 1.0) {
    m.validate();
    int off[4][2];
    detail::cfa_offsets(m.cfa, off);
    const int oh = m.height / 2, ow = m.width / 2;
    Tensor<T> out = Tensor<T>::zeros(Shape(1, 4, oh, ow));
    const double range = double(m.white_level - m.black_level);
    for (int c = 0; c < 4; ++c)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                const double raw = double(m.at(2 * y + off[c][0], 2 * x + off[c][1]));
                const double v = gain * (raw - m.black_level) / range;
                out.at(0, c, y, x) = T(std::clamp(v, 0.0, 1.0));
            }
    return out;
}

// Inverse of pack_raw for in-range values (testing aid).
template <typename T>
BayerMosaic unpack_raw(const Tensor<T>& packed, CfaPattern cfa, int black_level, int white_level) {
    const Shape s = packed.shape();
    if (s.n != 1 || s.c != 4) throw DimensionError("unpack_raw: expected 1x4xHxW tensor");
    BayerMosaic m;
    m.height = 2 * s.h;
    m.width = 2 * s.w;
    m.cfa = cfa;
    m.black_level = black_level;
    m.white_level = white_level;
    m.data.assign(std::size_t(m.height) * m.width, 0);
    int off[4][2];
    detail::cfa_offsets(cfa, off);
    for (int c = 0; c < 4; ++c)
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x) {
                const double v = double(packed.at(0, c, y, x));
                const double raw = v * (white_level - black_level) + black_level;
                m.data[std::size_t(2 * y + off[c][0]) * m.width + 2 * x + off[c][1]] =
                    std::uint16_t(std::lround(raw));
            }
    return m;
}

// Sidecar: UTF-8 "key = value" lines with keys cfa_pattern, black_level,
// white_level. Missing keys keep the 14-bit defaults.
inline void apply_sidecar(BayerMosaic& m, const std::string& sidecar_path) {
    std::ifstream in(sidecar_path);
    if (!in) throw FormatError("missing sidecar " + sidecar_path);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        if (key == "cfa_pattern")
            m.cfa = cfa_from_string(value);
        else if (key == "black_level")
            m.black_level = std::stoi(value);
        else if (key == "white_level")
            m.white_level = std::stoi(value);
        else
            throw FormatError("unknown sidecar key '" + key + "' in " + sidecar_path);
    }
}

// 16-bit grayscale PNG mosaic + sidecar -> BayerMosaic.
inline BayerMosaic load_mosaic(const std::string& png_path, const std::string& sidecar_path) {
    const PngImage img = read_png(png_path);
    if (img.channels != 1 || img.bit_depth != 16)
        throw FormatError(png_path + ": mosaic must be a 16-bit grayscale PNG");
    BayerMosaic m;
    m.height = img.height;
    m.width = img.width;
    m.data = img.pixels;
    apply_sidecar(m, sidecar_path);
    m.validate();
    return m;
}

inline void save_mosaic(const BayerMosaic& m, const std::string& png_path,
                        const std::string& sidecar_path) {
    PngImage img;
    img.width = m.width;
    img.height = m.height;
    img.channels = 1;
    img.bit_depth = 16;
    img.pixels = m.data;
    write_png(png_path, img);
    std::ofstream out(sidecar_path);
    out << "cfa_pattern = " << to_string(m.cfa) << "\n";
    out << "black_level = " << m.black_level << "\n";
    out << "white_level = " << m.white_level << "\n";
}

}  // namespace afnet
