// Statistical exposure of block withholding: deficit z-tests on expected
// block counts, minimum observation windows, fork archaeology over a block
// DAG, and pay-per-share bookkeeping audits.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "minesim/pool_accounting.hpp"
#include "minesim/sim_engine.hpp"

namespace minesim {

struct ObservationWindow {
    double expected_blocks = 0.0;   // from share rate / power and difficulty
    std::int64_t observed_blocks = 0;
};

enum class Verdict { Undetectable, Suspicious, Detected };

struct DetectionThresholds {
    double suspicious = 2.0;  // z at or above this is worth a second look
    double detected = 3.0;    // z at or above this is treated as established

    bool operator==(const DetectionThresholds&) const = default;
};

struct DetectionReport {
    double expected = 0.0;
    std::int64_t observed = 0;
    double z = 0.0;                        // (expected - observed) / sqrt(expected)
    double p_value = 1.0;                  // P(count <= observed) under the expected rate
    bool exact_tail = false;               // true when p comes from the exact Poisson tail
    double deficit_fraction = 0.0;         // (expected - observed) / expected
    double min_detectable_fraction = 0.0;  // smallest deficit this window could flag (> 1 = none)
    Verdict verdict = Verdict::Undetectable;
};

const char* verdict_name(Verdict v);

// One-sided deficit test. Exact Poisson tail below 30 expected blocks, the
// normal approximation at or above. Throws std::invalid_argument for a zero
// expectation with nonzero observations.
DetectionReport z_test(const ObservationWindow& w, const DetectionThresholds& t = {});

// Expected blocks needed before a deficit fraction w reaches z_required:
// (z_required / w)^2.
double min_blocks_to_detect(double withhold_fraction, double z_required);

struct DagWindowStats {
    std::int64_t start_height = 0;  // window covers [start_height, end_height]
    std::int64_t end_height = 0;
    std::int64_t blocks = 0;        // published blocks in the window (genesis excluded)
    std::int64_t stale = 0;
    std::int64_t child_of_stale = 0; // stale blocks whose parent is stale
    double wasted_pct = 0.0;
    double child_of_stale_pct = 0.0;
};

// Fork statistics per height window. Validates the DAG shape: genesis first,
// parents resolve backwards, heights increment, exactly one main tip chain.
// Destroyed (withheld) bookkeeping rows are ignored; they were never public.
std::vector<DagWindowStats> analyze_dag(const std::vector<BlockEvent>& dag, std::int64_t window);

std::string format_dag_stats_csv(const std::vector<DagWindowStats>& stats);

struct AuditReport {
    double implied_block_payout = 0.0; // difficulty * quoted per-share rate
    double fair_block_payout = 0.0;    // full block reward
    double shortfall = 0.0;            // 1 - implied / fair
    bool flagged = false;              // shortfall beyond what fees explain
};

// Does a pay-per-share quote add up to a full block per difficulty-1 shares?
// `tolerance` is the shortfall attributable to fees and operator margin.
AuditReport consistency_audit(const PoolConfig& pool, Difficulty d, double reward_btc,
                              double tolerance = 0.10);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov with the asymptotic p-value. Used to compare
// per-identity z-score populations.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// P(Z >= z) for a standard normal.
double gaussian_upper_tail(double z);

} // namespace minesim
