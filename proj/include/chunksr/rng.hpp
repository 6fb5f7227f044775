#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace chunksr {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a root seed and one or two tags.
inline uint64_t mix_seed(uint64_t seed, uint64_t tag_a, uint64_t tag_b = 0) {
    return splitmix64(splitmix64(seed ^ 0x6a09e667f3bcc908ull) ^ splitmix64(tag_a) ^ (tag_b * 0x9e3779b97f4a7c15ull));
}

// mt19937 core with explicit integer/float mappings. std::*_distribution is
// not pinned by the standard, so all mappings are done by hand to keep
// streams identical across standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(static_cast<uint32_t>(splitmix64(seed))) {}

    uint32_t next_u32() { return gen_(); }

    // [0, 1) with 24 bits of resolution
    float uniform() { return static_cast<float>(next_u32() >> 8) * (1.0f / 16777216.0f); }

    float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

    // [0, n), n > 0
    uint32_t uniform_int(uint32_t n) {
        return static_cast<uint32_t>((static_cast<uint64_t>(next_u32()) * n) >> 32);
    }

    float normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        float u1 = uniform();
        float u2 = uniform();
        if (u1 < 1e-12f) u1 = 1e-12f;
        const float r = std::sqrt(-2.0f * std::log(u1));
        const float a = 6.2831853071795864769f * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937 gen_;
    bool have_spare_ = false;
    float spare_ = 0.0f;
};

}  // namespace chunksr
