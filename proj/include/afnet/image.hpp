#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "afnet/tensor.hpp"

namespace afnet {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

struct PngImage {
    int width = 0, height = 0, channels = 0, bit_depth = 0;
    std::vector<std::uint16_t> pixels;  // interleaved, host order, 8-bit widened losslessly
};

inline PngImage read_png(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw FormatError("cannot open " + path);
    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw FormatError(path + " is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("failed to decode " + path);
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    PngImage img;
    img.width = int(png_get_image_width(png, info));
    img.height = int(png_get_image_height(png, info));
    img.bit_depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && img.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    if (img.bit_depth == 16) png_set_swap(png);  // file is big-endian
    png_read_update_info(png, info);

    img.bit_depth = png_get_bit_depth(png, info);
    img.channels = png_get_channels(png, info);
    if (img.bit_depth != 8 && img.bit_depth != 16)
        throw FormatError(path + ": unsupported bit depth " + std::to_string(img.bit_depth));
    if (img.channels != 1 && img.channels != 3)
        throw FormatError(path + ": unsupported channel count " + std::to_string(img.channels));

    const std::size_t stride = std::size_t(img.width) * img.channels;
    img.pixels.resize(stride * img.height);
    // whole-image read keeps interlaced files working
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> raster(rowbytes * img.height);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = raster.data() + std::size_t(y) * rowbytes;
    png_read_image(png, rows.data());
    for (int y = 0; y < img.height; ++y) {
        const png_byte* row = rows[y];
        if (img.bit_depth == 8)
            for (std::size_t i = 0; i < stride; ++i) img.pixels[y * stride + i] = row[i];
        else
            std::memcpy(img.pixels.data() + y * stride, row, stride * 2);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline void write_png(const std::string& path, const PngImage& img) {
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw FormatError("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw FormatError("failed to encode " + path);
    }
    png_init_io(png, fp.get());
    const int color = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width, img.height, img.bit_depth, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (img.bit_depth == 16) png_set_swap(png);

    const std::size_t stride = std::size_t(img.width) * img.channels;
    std::vector<png_byte> row(stride * (img.bit_depth / 8));
    for (int y = 0; y < img.height; ++y) {
        if (img.bit_depth == 8)
            for (std::size_t i = 0; i < stride; ++i) row[i] = png_byte(img.pixels[y * stride + i]);
        else
            std::memcpy(row.data(), img.pixels.data() + y * stride, stride * 2);
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// PNG -> 1 x C x H x W tensor scaled to [0,1].
template <typename T = float>
Tensor<T> load_image(const std::string& path) {
    const PngImage img = read_png(path);
    const T denom = img.bit_depth == 8 ? T(255) : T(65535);
    Tensor<T> out = Tensor<T>::zeros(Shape(1, img.channels, img.height, img.width));
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(0, c, y, x) =
                    T(img.pixels[(std::size_t(y) * img.width + x) * img.channels + c]) / denom;
    return out;
}

// Clamp to [0,1] and quantize round-half-up.
template <typename T>
void save_image(const Tensor<T>& t, const std::string& path, int bit_depth = 8) {
    const Shape s = t.shape();
    if (s.n != 1 || (s.c != 1 && s.c != 3))
        throw DimensionError("save_image: expected 1x{1,3}xHxW tensor");
    if (bit_depth != 8 && bit_depth != 16) throw FormatError("save_image: bit depth must be 8 or 16");
    PngImage img;
    img.width = s.w;
    img.height = s.h;
    img.channels = s.c;
    img.bit_depth = bit_depth;
    const double peak = bit_depth == 8 ? 255.0 : 65535.0;
    img.pixels.resize(std::size_t(s.w) * s.h * s.c);
    for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
            for (int c = 0; c < s.c; ++c) {
                double v = std::clamp(double(t.at(0, c, y, x)), 0.0, 1.0);
                img.pixels[(std::size_t(y) * s.w + x) * s.c + c] =
                    std::uint16_t(std::floor(v * peak + 0.5));
            }
    write_png(path, img);
}

}  // namespace afnet
