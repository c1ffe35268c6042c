#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace acdc {

// splitmix64, used to stretch user seeds and to derive independent
// sub-streams. Streams derived from distinct (seed, tag, index) triples
// never share draws, so enabling one pipeline stage cannot shift the
// randomness consumed by another.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64(splitmix64(seed) ^ splitmix64(tag));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return splitmix64(mix_seed(seed, tag) ^ splitmix64(index + 0x51d9d2a317ull));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Box-Muller without the cached second value: two uniforms per draw,
    // so copies of an Rng stay in lockstep.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

    // [0, n)
    int uniform_int(int n) {
        return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
    }

    std::vector<double> normal_vec(std::size_t d) {
        std::vector<double> v(d);
        for (auto& x : v) x = normal();
        return v;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace acdc
