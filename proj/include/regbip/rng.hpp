#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace regbip {

// Seedable PRNG with platform-independent output streams.
//
// Engine: std::mt19937_64 (bit-exact across implementations by the C++
// standard). Bounded draws use rejection sampling instead of
// std::uniform_int_distribution, whose output is implementation-defined.
// Stream semantics: each call consumes engine words in documented order,
// so a fixed (seed, call sequence) reproduces identical values everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, bound), bound >= 1. Unbiased via rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    // Fair coin: consumes one engine word, returns its low bit.
    bool coin() { return (engine_() & 1u) != 0; }

    // Uniform real in (0, 1]: 53-bit mantissa draw, one engine word.
    double unit_real() {
        return static_cast<double>((engine_() >> 11) + 1) * (1.0 / 9007199254740992.0);
    }

    // Fisher-Yates, back to front, one below() call per step.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derived stream for an independent sub-task; advances this stream by
    // one word. SplitMix64 finalizer decorrelates consecutive spawns.
    Rng spawn() {
        std::uint64_t z = next_u64() + 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace regbip
