#include "minesim/core_model.hpp"

#include <cmath>
#include <stdexcept>

namespace minesim {

namespace {

constexpr double kHashesPerDifficultyOne = 4294967296.0; // 2^32

// Sequential inversion: walk the CDF until it passes a uniform draw.
// Cost is O(K) per sample, fine for K < 30.
std::uint64_t sample_poisson_inversion(double mean, Rng& rng) {
    const double u = rng.uniform();
    double p = std::exp(-mean);
    double cum = p;
    std::uint64_t k = 0;
    // Hard cap guards against the CDF saturating one ulp below u.
    const std::uint64_t cap = static_cast<std::uint64_t>(mean + 40.0 * std::sqrt(mean + 1.0) + 60.0);
    while (u > cum && k < cap) {
        ++k;
        p *= mean / static_cast<double>(k);
        cum += p;
    }
    return k;
}

// Transformed rejection with squeeze (Hormann's PTRS sampler): a table-free
// method whose proposal is a transformed uniform shaped like the normal
// approximation of the target. Exact for all means where it is invoked.
std::uint64_t sample_poisson_ptrs(double mean, Rng& rng) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) {
            return static_cast<std::uint64_t>(kf);
        }
        if (kf < 0.0 || (us < 0.013 && v > us)) {
            continue;
        }
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            kf * loglam - mean - std::lgamma(kf + 1.0)) {
            return static_cast<std::uint64_t>(kf);
        }
    }
}

} // namespace

double expected_blocks(Hashrate h, Difficulty d, double duration_seconds) {
    if (!(h.hashes_per_second >= 0.0) || !std::isfinite(h.hashes_per_second)) {
        throw std::invalid_argument("expected_blocks: hashrate must be finite and >= 0");
    }
    if (!(d.value >= 1.0) || !std::isfinite(d.value)) {
        throw std::invalid_argument("expected_blocks: difficulty must be finite and >= 1");
    }
    if (!(duration_seconds >= 0.0) || !std::isfinite(duration_seconds)) {
        throw std::invalid_argument("expected_blocks: duration must be finite and >= 0");
    }
    return h.hashes_per_second * duration_seconds / (d.value * kHashesPerDifficultyOne);
}

BlockCountDistribution mining_distribution(double expected) {
    if (!(expected >= 0.0) || !std::isfinite(expected)) {
        throw std::invalid_argument("mining_distribution: expected count must be finite and >= 0");
    }
    return BlockCountDistribution{expected, std::sqrt(expected)};
}

std::uint64_t sample_block_count(double expected, Rng& rng) {
    if (!(expected >= 0.0) || !std::isfinite(expected)) {
        throw std::invalid_argument("sample_block_count: expected count must be finite and >= 0");
    }
    if (expected == 0.0) {
        return 0;
    }
    if (expected < 30.0) {
        return sample_poisson_inversion(expected, rng);
    }
    return sample_poisson_ptrs(expected, rng);
}

double binomial_poisson_gap(double trials, double success_probability) {
    if (!(trials >= 1.0)) {
        throw std::invalid_argument("binomial_poisson_gap: need at least one trial");
    }
    if (!(success_probability >= 0.0) || !(success_probability <= 1.0)) {
        throw std::invalid_argument("binomial_poisson_gap: probability outside [0, 1]");
    }
    // (n*mu - n*sigma^2) / (n*mu) with sigma^2 = mu*(1-mu).
    return success_probability;
}

double poisson_lower_tail(double mean, std::uint64_t k) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw std::invalid_argument("poisson_lower_tail: mean must be finite and >= 0");
    }
    if (mean == 0.0) {
        return 1.0;
    }
    // Direct pmf summation; stable for the small means this is used with,
    // usable up to a few thousand.
    double p = std::exp(-mean);
    double cum = p;
    for (std::uint64_t i = 1; i <= k; ++i) {
        p *= mean / static_cast<double>(i);
        cum += p;
    }
    return cum < 1.0 ? cum : 1.0;
}

} // namespace minesim
