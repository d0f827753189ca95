#pragma once

// Counter-free deterministic RNG. Every consumer derives its own stream from
// a root seed plus string tags, so results do not depend on evaluation order.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace mvfuse {

// splitmix64: tiny, well mixed, reproducible everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller; one value per call, no cached state.
    double normal() {
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
    std::uint64_t state_;
};

// FNV-1a over a tag string, used to fork independent seed streams.
inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char c : tag) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
    Rng mix(root ^ hash_tag(tag));
    return mix.next_u64();
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index) {
    Rng mix(root ^ hash_tag(tag) ^ (0x9e3779b97f4a7c15ull * (index + 1)));
    return mix.next_u64();
}

}  // namespace mvfuse
