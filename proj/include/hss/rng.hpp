#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace hss {

// Counter-based deterministic RNG. Every draw is a pure function of
// (seed, stream_id, draw counter), so estimators can fan out over
// disjoint streams and reproduce results for any thread count.
class SeededRng {
  public:
    SeededRng() : SeededRng(0, 0) {}
    SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_(stream_id), key_(derive_key(seed, stream_id)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    // Derived stream, statistically independent of this one for any distinct
    // substream index. Counter starts at zero.
    SeededRng stream(std::uint64_t substream) const {
        return SeededRng(seed_, mix64(stream_ ^ (0x9E3779B97F4A7C15ULL + mix64(substream + 1))));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (counter_++) * 0xD1B54A32D192ED03ULL;
        return mix64(z ^ key_);
    }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n >= 1.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection-free modulo is fine at these scales; bias < 2^-53 for n < 2^11.
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double rademacher() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = std::numeric_limits<double>::min();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

  private:
    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t k = mix64(seed + 0x9E3779B97F4A7C15ULL);
        k = mix64(k ^ mix64(stream + 0xBF58476D1CE4E5B9ULL));
        return k;
    }

    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace hss
