#pragma once

// Counter-based splittable RNG.
//
// Every stochastic routine in the library draws from an RngStream.  A stream is
// a (key, counter) pair: output i is splitmix64's finalizer applied to
// key + i*golden, so streams are pure functions of (key, i) and can be split
// without sharing state.  Child streams derive their key by hashing the parent
// key with a label (FNV-1a), which gives stable, order-independent substreams:
// the loop-mass estimator, the SLE sampler and the verifier can all be handed
// the same root seed and still consume independent sequences.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace loewner {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::uint64_t h, const char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001B3ull;
    }
    return h;
}

struct RngStream {
    std::uint64_t key = 0;
    std::uint64_t ctr = 0;

    RngStream() = default;
    explicit RngStream(std::uint64_t seed) : key(mix64(seed ^ kGolden)) {}

    // Deterministic child streams; the counter of the parent is untouched.
    RngStream child(std::string_view label) const {
        RngStream s;
        s.key = mix64(fnv1a(key ^ 0xCBF29CE484222325ull, label.data(), label.size()));
        return s;
    }
    RngStream child(std::uint64_t index) const {
        RngStream s;
        s.key = mix64(key ^ (index + 1) * 0xD1342543DE82EF95ull);
        return s;
    }

    std::uint64_t next_u64() { return mix64(key + (++ctr) * kGolden); }

    // uniform in [0,1) with 53 random bits
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0,1], safe as a log() argument
    double next_double_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Box-Muller; always consumes exactly two counter values
    double next_gaussian() {
        double u = next_double_pos();
        double v = next_double();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925286766559 * v);
    }
};

} // namespace loewner
