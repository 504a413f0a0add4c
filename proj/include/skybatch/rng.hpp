#pragma once

#include <cmath>
#include <cstdint>

namespace skybatch {

// splitmix64; used for seed mixing and as the generator behind the synthetic
// workloads. Self-contained so generated traces are reproducible byte for
// byte regardless of the standard library's distribution implementations.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // warm up so that small seeds diverge immediately
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    double exponential(double rate) { return -std::log(1.0 - uniform()) / rate; }

    // standard normal, Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        do {
            u = uniform();
        } while (u <= 0.0);
        double v = uniform();
        double r = std::sqrt(-2.0 * std::log(u));
        spare_ = r * std::sin(6.283185307179586477 * v);
        have_spare_ = true;
        return r * std::cos(6.283185307179586477 * v);
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace skybatch
