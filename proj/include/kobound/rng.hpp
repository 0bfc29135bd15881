#pragma once

#include <cstdint>

namespace kobound {

/// SplitMix64 generator (Steele, Lea & Flood). Chosen because the whole
/// state-advance is three shift-xor-multiply steps on a single uint64, so the
/// stream is identical on every platform for a given seed.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), built from the top 53 bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi); mapping is lo + u * (hi - lo).
    double next_in(double lo, double hi) { return lo + next_unit() * (hi - lo); }

    /// Uniform integer in {0, ..., n-1}.
    std::uint64_t next_index(std::uint64_t n) {
        auto i = static_cast<std::uint64_t>(next_unit() * static_cast<double>(n));
        return i >= n ? n - 1 : i;
    }

  private:
    std::uint64_t state_;
};

/// Decorrelated child seed for stream k of a base seed. One scramble round of
/// an affine index map; documented so pools are reproducible from
/// (base_seed, k) alone.
inline std::uint64_t derive_stream_seed(std::uint64_t base_seed, std::uint64_t k) {
    std::uint64_t z = base_seed + (k + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace kobound
