// Block-discovery statistics at constant difficulty: expected block counts,
// the square-root dispersion law, and Poisson sampling.
#pragma once

#include <cstdint>

#include "minesim/rng.hpp"

namespace minesim {

// Hashes per second. Mining hardware is only characterized by this number.
struct Hashrate {
    double hashes_per_second = 0.0;
};

// Network difficulty: a block solution takes d * 2^32 hash attempts on
// average, so difficulty 1 corresponds to one expected block per 2^32 hashes.
struct Difficulty {
    double value = 1.0;
};

// Number of blocks found over a fixed period: mean K, stddev sqrt(K).
struct BlockCountDistribution {
    double mean = 0.0;
    double stddev = 0.0;
    double relative_stddev() const { return mean > 0.0 ? stddev / mean : 0.0; }
};

// Expected blocks K = h * t / (d * 2^32).
double expected_blocks(Hashrate h, Difficulty d, double duration_seconds);

// The dispersion law: K expected blocks come with stddev sqrt(K).
BlockCountDistribution mining_distribution(double expected);

// One draw of the realized block count for expectation K. Exact Poisson:
// sequential inversion below K = 30, transformed rejection (a normal-shaped
// proposal with a squeeze step) at and above it. Both samplers are local to
// this project so a seed pins the byte-exact sequence everywhere.
std::uint64_t sample_block_count(double expected, Rng& rng);

// Relative gap between the exact per-trial binomial variance and its Poisson
// limit: (n*mu - n*mu*(1-mu)) / (n*mu) = mu. With mu = 2^-64 per hash the
// approximation error is ~5.4e-20, which is why the Poisson model is used
// throughout instead of per-hash coin flips.
double binomial_poisson_gap(double trials, double success_probability);

// P(X <= k) for X ~ Poisson(mean). Used for exact small-count tail tests.
double poisson_lower_tail(double mean, std::uint64_t k);

} // namespace minesim
