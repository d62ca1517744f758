#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace twopath {

// All randomness flows through this wrapper. mt19937's output sequence is
// pinned by the standard; the std:: distributions are not, so the transforms
// live here and are part of the determinism contract.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(static_cast<uint32_t>(seed ^ (seed >> 32))) {}

    uint32_t next_u32() { return eng_(); }

    // [0,1) with 24 bits of precision
    float uniform01f() { return static_cast<float>(eng_() >> 8) * (1.0f / 16777216.0f); }

    // [0,1) with 53 bits of precision
    double uniform01d() {
        const uint64_t hi = eng_() >> 5, lo = eng_() >> 6;
        return (static_cast<double>(hi) * 67108864.0 + static_cast<double>(lo)) *
               (1.0 / 9007199254740992.0);
    }

    float uniform(float lo, float hi) { return lo + (hi - lo) * uniform01f(); }

    // Box-Muller, second value cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01d(), u2 = uniform01d();
        while (u1 <= 1e-300) u1 = uniform01d();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return uniform01d() < p; }

    // uniform in [0, n); modulo bias is irrelevant here, determinism is not
    uint32_t below(uint32_t n) { return eng_() % n; }

    template <typename V>
    void shuffle(std::vector<V>& v) {
        for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(static_cast<uint32_t>(i))]);
    }

private:
    std::mt19937 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t mix64(uint64_t x) {
    x ^= x >> 33;
    x *= 0xFF51AFD7ED558CCDULL;
    x ^= x >> 33;
    x *= 0xC4CEB9FE1A85EC53ULL;
    x ^= x >> 33;
    return x;
}

// One base seed expands into independent per-component streams by a fixed
// labeled hash, so adding a consumer never shifts another component's stream.
inline uint64_t seed_for(std::string_view component, uint64_t base_seed) {
    return mix64(fnv1a64(component) ^ (base_seed * 0x9E3779B97F4A7C15ULL));
}

// Per-item seed for parallel corruption of distinct images.
inline uint64_t seed_for_index(uint64_t base_seed, uint64_t index) {
    return mix64(base_seed ^ ((index + 1) * 0x9E3779B97F4A7C15ULL));
}

}  // namespace twopath
