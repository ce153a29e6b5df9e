#pragma once

#include <cstdint>
#include <cmath>

namespace hopgag {

/// Counter-based 64-bit generator (SplitMix64). Output k is a pure
/// function of (seed, k), so streams are reproducible bit-for-bit on any
/// platform and independent of evaluation order.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Uniform integer in [0, n).
    std::uint64_t next_index(std::uint64_t n) {
        // Multiply-shift rejection-free map; bias is < 2^-53 for desk-scale n.
        return static_cast<std::uint64_t>(next_double() * static_cast<double>(n));
    }

    /// Standard normal via the Marsaglia polar method (caches the spare).
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_double() - 1.0;
            v = 2.0 * next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derives an independent sub-stream seed from a base seed and up to three
/// stream coordinates (grid indices, trial numbers, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = SplitMix64::mix(base);
    s = SplitMix64::mix(s ^ (a + 0x9E3779B97F4A7C15ULL));
    s = SplitMix64::mix(s ^ (b + 0xD1B54A32D192ED03ULL));
    s = SplitMix64::mix(s ^ (c + 0x8CB92BA72F3D8DD7ULL));
    return s;
}

} // namespace hopgag
