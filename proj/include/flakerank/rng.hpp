#pragma once

#include <cstdint>

namespace flakerank {

/// SplitMix64 (Steele, Lea & Flood). Chosen for a precisely specified,
/// portable sequence: ports in other languages can reproduce runs from
/// the same seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform index in [0, n). n must be positive.
    std::size_t next_index(std::size_t n) {
        const auto idx = static_cast<std::size_t>(next_double() * static_cast<double>(n));
        return idx < n ? idx : n - 1;
    }

    /// Uniform in [lo, hi).
    double next_range(double lo, double hi) { return lo + next_double() * (hi - lo); }

private:
    std::uint64_t state_;
};

}  // namespace flakerank
