// Pool reward schemes and payout arithmetic. All money is integer satoshis;
// payouts conserve the distributed amount exactly.
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "minesim/core_model.hpp"

namespace minesim {

using Satoshis = std::int64_t;
constexpr Satoshis kSatoshisPerBtc = 100'000'000;

Satoshis btc_to_sat(double btc);
double sat_to_btc(Satoshis s);

enum class RewardScheme { Proportional, PayPerShare };

struct PoolConfig {
    std::string id;
    RewardScheme scheme = RewardScheme::Proportional;
    double fee = 0.0;            // fraction retained by the operator (proportional)
    double pps_rate = 0.0;       // BTC paid per difficulty-1 share (pay-per-share)

    bool operator==(const PoolConfig&) const = default;
};

// What a pool observed for one accounting period.
struct PoolLedger {
    std::string pool_id;
    std::map<std::string, double> shares; // miner -> submitted share count
    std::int64_t blocks_found = 0;
    Satoshis revenue = 0;                 // block rewards the pool actually collected
};

// Split `ledger.revenue` minus the fee across miners in proportion to shares.
// Rounds to whole satoshis with largest-remainder correction, so
// sum(payouts) + fee_retained == revenue exactly.
struct ProportionalPayout {
    std::map<std::string, Satoshis> payouts;
    Satoshis fee_retained = 0;
};
ProportionalPayout distribute_proportional(const PoolLedger& ledger, double fee);

// Implied full-block payout of a pay-per-share quote: difficulty * rate.
// A fair PPS pool quotes reward * (1 - fee) / difficulty per share, so this
// recovers the per-block payout the pool is committing to.
double pps_rate_check(Difficulty d, double rate_btc_per_share);

// Per-share payout a pool can sustain from what it actually earned.
double sustainable_pps_rate(const PoolLedger& ledger, double fee);

// Long-run revenue factor of a pool whose hashpower includes a fraction
// `withhold_fraction` that submits shares but discards full solutions.
double expected_pool_deficit(double withhold_fraction);

} // namespace minesim
