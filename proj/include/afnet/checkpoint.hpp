#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "afnet/tensor.hpp"

namespace afnet {

// Self-describing parameter container: a UTF-8 manifest (names, shapes,
// element offsets) followed by a little-endian float32 payload. Values
// round-trip bit-exactly.
struct Checkpoint {
    static constexpr int kFormatVersion = 1;

    struct Blob {
        std::string name;
        Shape shape;
        std::vector<float> values;
    };

    int epoch = 0;
    double best_val_psnr = -std::numeric_limits<double>::infinity();
    int adam_steps_g = 0, adam_steps_d1 = 0, adam_steps_d2 = 0;
    std::string config_text;
    std::vector<Blob> tensors;

    void add(const std::string& name, const Shape& shape, const std::vector<float>& values) {
        if (values.size() != shape.numel())
            throw DimensionError("checkpoint blob " + name + ": size mismatch");
        for (const auto& t : tensors)
            if (t.name == name) throw ParameterError("checkpoint blob " + name + " added twice");
        tensors.push_back({name, shape, values});
    }

    const Blob& find(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return t;
        throw FormatError("checkpoint has no tensor named '" + name + "'");
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw FormatError("cannot write checkpoint " + path);
        char buf[128];
        out << "AFNET-CKPT " << kFormatVersion << "\n";
        out << "epoch " << epoch << "\n";
        std::snprintf(buf, sizeof(buf), "best_val_psnr %.17g\n", best_val_psnr);
        out << buf;
        out << "adam_steps " << adam_steps_g << " " << adam_steps_d1 << " " << adam_steps_d2
            << "\n";
        out << "config_begin\n" << config_text;
        if (!config_text.empty() && config_text.back() != '\n') out << "\n";
        out << "config_end\n";
        out << "tensors " << tensors.size() << "\n";
        std::uint64_t offset = 0;
        for (const auto& t : tensors) {
            out << t.name << " " << t.shape.n << " " << t.shape.c << " " << t.shape.h << " "
                << t.shape.w << " " << offset << "\n";
            offset += t.values.size();
        }
        out << "payload " << offset << "\n";
        std::vector<unsigned char> bytes;
        bytes.reserve(1 << 20);
        for (const auto& t : tensors)
            for (const float v : t.values) {
                const std::uint32_t u = std::bit_cast<std::uint32_t>(v);
                bytes.push_back(u & 0xff);
                bytes.push_back((u >> 8) & 0xff);
                bytes.push_back((u >> 16) & 0xff);
                bytes.push_back((u >> 24) & 0xff);
            }
        out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        if (!out) throw FormatError("short write to checkpoint " + path);
    }

    static Checkpoint load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FormatError("cannot open checkpoint " + path);
        std::string word;
        int version = -1;
        in >> word >> version;
        if (word != "AFNET-CKPT") throw FormatError(path + " is not a checkpoint file");
        if (version != kFormatVersion)
            throw FormatError(path + ": unsupported checkpoint version " +
                              std::to_string(version));
        Checkpoint ck;
        in >> word >> ck.epoch;
        if (word != "epoch") throw FormatError(path + ": malformed header (epoch)");
        in >> word;
        if (word != "best_val_psnr") throw FormatError(path + ": malformed header (psnr)");
        in >> word;
        ck.best_val_psnr = std::strtod(word.c_str(), nullptr);
        in >> word >> ck.adam_steps_g >> ck.adam_steps_d1 >> ck.adam_steps_d2;
        if (word != "adam_steps") throw FormatError(path + ": malformed header (adam)");
        in >> word;
        if (word != "config_begin") throw FormatError(path + ": malformed header (config)");
        in.ignore();  // end of line
        std::string line;
        std::ostringstream cfg;
        while (std::getline(in, line) && line != "config_end") cfg << line << "\n";
        if (line != "config_end") throw FormatError(path + ": unterminated config block");
        ck.config_text = cfg.str();

        std::size_t count = 0;
        in >> word >> count;
        if (word != "tensors") throw FormatError(path + ": malformed manifest");
        std::vector<std::uint64_t> offsets(count);
        for (std::size_t i = 0; i < count; ++i) {
            Blob b;
            in >> b.name >> b.shape.n >> b.shape.c >> b.shape.h >> b.shape.w >> offsets[i];
            if (!in) throw FormatError(path + ": malformed manifest entry");
            ck.tensors.push_back(std::move(b));
        }
        std::uint64_t payload = 0;
        in >> word >> payload;
        if (word != "payload") throw FormatError(path + ": missing payload header");
        in.ignore();  // newline before the binary section

        std::vector<unsigned char> bytes(payload * 4);
        in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
        if (std::size_t(in.gcount()) != bytes.size())
            throw FormatError(path + ": truncated payload");
        for (std::size_t i = 0; i < count; ++i) {
            Blob& b = ck.tensors[i];
            const std::uint64_t n = b.shape.numel();
            if (offsets[i] + n > payload) throw FormatError(path + ": manifest exceeds payload");
            b.values.resize(n);
            for (std::uint64_t j = 0; j < n; ++j) {
                const std::size_t o = (offsets[i] + j) * 4;
                const std::uint32_t u = std::uint32_t(bytes[o]) | (std::uint32_t(bytes[o + 1]) << 8) |
                                        (std::uint32_t(bytes[o + 2]) << 16) |
                                        (std::uint32_t(bytes[o + 3]) << 24);
                b.values[j] = std::bit_cast<float>(u);
            }
        }
        return ck;
    }
};

}  // namespace afnet
