// Seedable counter-based random number generator.
//
// Every stochastic code path in the library draws from this generator, seeded
// explicitly by the caller; no wall clock or OS entropy is consumed anywhere.
// The output sequence is a pure function of (seed, stream, draw index), which
// makes ensemble runs reproducible byte-for-byte and trivially parallel:
// worker k uses Rng::stream(seed, k).

#pragma once

#include <cstdint>

namespace qcp {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : counter_(seed) {}

    // Independent substream derived from (seed, index).
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        return Rng(mix(seed ^ mix(index + 0x9e3779b97f4a7c15ull)));
    }

    std::uint64_t next_u64() {
        counter_ += 0x9e3779b97f4a7c15ull;
        return mix(counter_);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        return next_u64() % n;
    }

    bool next_bernoulli(double p) { return next_unit() < p; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t counter_;
};

} // namespace qcp
