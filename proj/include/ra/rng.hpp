#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ra {

// Deterministic RNG wrapper. All draws go through hand-rolled conversions
// so that a (seed, call sequence) pair produces the same values on every
// platform and standard library.
class Rng {
public:
    Rng() : engine_(0x9e3779b97f4a7c15ull) {}
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Rejection-free modulo bias is negligible for
    // the small n used here, but we reject anyway to keep draws exact.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform() < p;
    }

    // Box-Muller, one value per call (the pair's second half is cached).
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// splitmix64; used to derive well-separated stream seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Named, independent RNG streams derived from one master seed. Every
// stochastic component owns its stream so that adding draws to one component
// never perturbs another.
enum class Stream : std::uint64_t {
    traffic = 1,
    policy = 2,
    init = 3,
    replay = 4,
    layout = 5,
    baseline = 6,
    eval_traffic = 7,
    eval_policy = 8,
};

class SeedPolicy {
public:
    explicit SeedPolicy(std::uint64_t master) : master_(master) {}

    std::uint64_t master() const { return master_; }

    Rng stream(Stream s, std::uint64_t salt = 0) const {
        std::uint64_t x = mix_seed(master_ ^ mix_seed(static_cast<std::uint64_t>(s)));
        x = mix_seed(x ^ mix_seed(salt + 0x51ed2701));
        return Rng(x);
    }

private:
    std::uint64_t master_;
};

} // namespace ra
