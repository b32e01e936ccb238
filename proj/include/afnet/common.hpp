#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace afnet {

// Error hierarchy. The CLI maps these onto exit codes, everything else
// just lets them propagate.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
    using Error::Error;
};
struct ParameterError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
struct FormatError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

// Input front-end of the enhancement network: 3-channel sRGB or packed
// 4-channel raw.
enum class InputMode { Srgb3, Raw4 };

inline const char* to_string(InputMode m) { return m == InputMode::Srgb3 ? "srgb3" : "raw4"; }
inline InputMode input_mode_from_string(const std::string& s) {
    if (s == "srgb3") return InputMode::Srgb3;
    if (s == "raw4") return InputMode::Raw4;
    throw ConfigError("unknown input_mode '" + s + "'");
}
inline int channels_for(InputMode m) { return m == InputMode::Srgb3 ? 3 : 4; }

// Checked mode scans op outputs for NaN/Inf. On by default; the training
// loop switches it off for timed runs.
inline bool& checked_mode_flag() {
    static bool on = true;
    return on;
}
inline bool checked_mode() { return checked_mode_flag(); }
inline void set_checked_mode(bool on) { checked_mode_flag() = on; }

struct CheckedModeGuard {
    bool prev;
    explicit CheckedModeGuard(bool on) : prev(checked_mode()) { set_checked_mode(on); }
    ~CheckedModeGuard() { set_checked_mode(prev); }
};

// Graph recording toggle, used to skip autodiff bookkeeping during
// validation and inference.
inline bool& grad_mode_flag() {
    static thread_local bool on = true;
    return on;
}
inline bool grad_enabled() { return grad_mode_flag(); }

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_mode_flag()) { grad_mode_flag() = false; }
    ~NoGradGuard() { grad_mode_flag() = prev; }
};

inline std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic RNG with identical streams on every platform (the std
// distributions are implementation-defined, which would break the
// byte-identical-run contract).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
        have_cached_normal_ = false;
    }

    // Derives an independent stream, e.g. per (epoch, sample) pair.
    static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        std::uint64_t s = seed;
        std::uint64_t m = splitmix64(s) ^ (a * 0x9e3779b97f4a7c15ULL);
        m = m * 0xff51afd7ed558ccdULL + b;
        return Rng(m);
    }

    std::uint64_t next_u64() {  // xoshiro256++
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

    double normal() {  // Box-Muller, cached second draw
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_normal_ = r * std::sin(a);
        have_cached_normal_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
    bool have_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace afnet
