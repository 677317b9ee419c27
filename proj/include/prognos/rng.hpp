// Seedable random number generation. The generator is splitmix64 (Vigna's
// reference constants): state advances by the golden-ratio increment
// 0x9E3779B97F4A7C15 and each output is the mixed state. It is trivially
// portable, so a given seed produces the same stream on every platform.
//
// Substreams for (seed, unit, cycle, sample) tuples are derived by folding
// each word into the key with XOR followed by one splitmix64 step; batch
// and streaming inference both use this rule, which is what makes their
// outputs bit-identical.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace prognos {

namespace detail {
inline std::uint64_t splitmix64_advance(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace detail

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return detail::splitmix64_advance(state_); }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). Plain modulo; the bias is negligible for
    // the index ranges used here and the result is part of the documented
    // stream contract.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::next_below: n must be positive");
        return next_u64() % n;
    }

  private:
    std::uint64_t state_;
};

// Substream key derivation: key <- splitmix64_step(key ^ word) per word.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t k = seed;
    for (std::uint64_t word : {a, b, c}) {
        std::uint64_t folded = k ^ word;
        k = detail::splitmix64_advance(folded);
    }
    return k;
}

// One draw of an inverted-scaling dropout mask: each entry is 0 with
// probability drop_rate and 1/(1-drop_rate) otherwise, so E[mask] = 1.
// The same mask convention serves training and MC inference.
inline std::vector<double> sample_mask(Rng& rng, std::size_t len, double drop_rate) {
    if (drop_rate < 0.0 || drop_rate >= 1.0)
        throw std::invalid_argument("sample_mask: drop_rate must be in [0,1)");
    std::vector<double> mask(len);
    if (drop_rate == 0.0) {
        for (auto& m : mask) m = 1.0;
        return mask;
    }
    const double keep_scale = 1.0 / (1.0 - drop_rate);
    for (auto& m : mask) m = rng.next_double() < drop_rate ? 0.0 : keep_scale;
    return mask;
}

}  // namespace prognos
