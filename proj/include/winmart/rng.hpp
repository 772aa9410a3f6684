#pragma once

// Splittable, platform-independent random streams.
//
// Per-path stream construction: stream(i) is a xoshiro256++ generator whose
// state is filled by a SplitMix64 chain seeded with
//   splitmix64(master + GOLDEN * (i + 1)),
// so any path is reproducible from (master seed, path index) alone and
// streams are independent of scheduling. Normals come from Box-Muller on
// 53-bit uniforms; the generator caches the spare deviate.

#include <cstdint>
#include <cmath>
#include <numbers>

namespace winmart {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += kGolden);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on (0,1]: (n >> 11) * 2^-53 with the zero mapped to 2^-53.
    double uniform01() {
        const std::uint64_t bits = next() >> 11;
        return (double(bits) + 1.0) * 0x1.0p-53;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

/// Standard normal stream (Box-Muller with cached spare).
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = gen_.uniform01();
        const double u2 = gen_.uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    Xoshiro256pp gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Seed of the per-path stream derived from (master, path_index).
inline std::uint64_t path_stream_seed(std::uint64_t master, std::uint64_t path_index) {
    std::uint64_t s = master + kGolden * (path_index + 1);
    return splitmix64(s);
}

}  // namespace winmart
