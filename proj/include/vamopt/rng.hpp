#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vamopt {

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic child seed for a (base, index...) path.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

// Thin wrapper over mt19937_64 with platform-independent variate mapping.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer on [lo, hi].
    int uniform_int(int lo, int hi);
    double exponential(double rate);

private:
    std::mt19937_64 engine_;
};

}  // namespace vamopt
