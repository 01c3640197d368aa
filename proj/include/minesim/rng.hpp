// Deterministic random source. The engine is specified exactly (mt19937_64)
// and all variate code lives in this project, so a given seed produces the
// same stream on every platform.
#pragma once

#include <cstdint>
#include <random>

namespace minesim {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Independent stream for replicate `stream` of a run seeded with `base`.
    static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
        return splitmix64(base ^ splitmix64(stream + 0x6a09e667f3bcc908ULL));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

} // namespace minesim
