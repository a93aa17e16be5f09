#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sggp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_name(std::string_view name) {
    // FNV-1a, stable across platforms.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seedable random stream with platform-independent draw semantics.
// std::uniform_real_distribution is implementation-defined, so the
// double/int draws are done by hand on top of mt19937_64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

    // Named substream, derived from the logical seed (not engine state),
    // so each stream can be replayed independently.
    Rng substream(std::string_view name) const {
        return Rng(splitmix64(seed_ ^ hash_name(name)));
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n); n must be positive.
    std::size_t uniform_index(std::size_t n) {
        std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v > bound);
        return static_cast<std::size_t>(v % n);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

} // namespace sggp
