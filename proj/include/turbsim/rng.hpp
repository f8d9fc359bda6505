#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace turbsim {

/// Deterministic seeded random stream (xoshiro256++ seeded via splitmix64).
///
/// Every consumer derives its stream from (top seed, module name, index) so
/// parallel generation is order-independent: stream(seed, "screens", 7) is
/// the same no matter which thread asks for it.
class RandomStream {
public:
    explicit RandomStream(uint64_t seed) { init(seed); }

    RandomStream(uint64_t top_seed, std::string_view module, uint64_t index) {
        init(mix(mix(top_seed ^ fnv1a(module), 0x9E3779B97F4A7C15ull), index));
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.28318530717958647692 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    static uint64_t fnv1a(std::string_view s) {
        uint64_t h = 0xcbf29ce484222325ull;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return h;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static uint64_t mix(uint64_t z, uint64_t add) {
        z += add + 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    void init(uint64_t seed) {
        uint64_t z = seed;
        for (auto& s : s_) {
            z = mix(z, 1);
            s = z;
        }
        have_spare_ = false;
    }

    uint64_t s_[4];
    double spare_ = 0;
    bool have_spare_ = false;
};

}  // namespace turbsim
