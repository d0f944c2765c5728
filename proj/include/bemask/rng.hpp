#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace bemask {

// splitmix64 finalizer. Public-domain mixing function (Vigna, 2015).
constexpr uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic random stream derived from an explicit key tuple, e.g.
// (seed, batch_index, example_index). Streams with distinct keys are
// statistically independent; the same key always replays the same draws.
// All arithmetic is plain uint64, so output is identical across platforms
// and standard libraries (std:: distributions are not).
class KeyedRng {
  public:
    explicit KeyedRng(std::initializer_list<uint64_t> key) {
        state_ = 0x243f6a8885a308d3ULL;  // arbitrary non-zero start
        for (uint64_t k : key) state_ = mix64(state_ ^ k);
    }

    KeyedRng(uint64_t seed, uint64_t a) : KeyedRng({seed, a}) {}
    KeyedRng(uint64_t seed, uint64_t a, uint64_t b) : KeyedRng({seed, a, b}) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    uint64_t next_below(uint64_t n) {
        if (n <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

  private:
    uint64_t state_;
};

// FNV-1a over raw bytes. Used for stable content hashes in file headers.
constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

inline uint64_t fnv1a(std::string_view bytes, uint64_t h = kFnvOffset) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

}  // namespace bemask
