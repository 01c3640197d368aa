#include "minesim/pool_accounting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace minesim {

Satoshis btc_to_sat(double btc) {
    return static_cast<Satoshis>(std::llround(btc * static_cast<double>(kSatoshisPerBtc)));
}

double sat_to_btc(Satoshis s) {
    return static_cast<double>(s) / static_cast<double>(kSatoshisPerBtc);
}

ProportionalPayout distribute_proportional(const PoolLedger& ledger, double fee) {
    if (!(fee >= 0.0) || !(fee < 1.0)) {
        throw std::invalid_argument("distribute_proportional: fee outside [0, 1)");
    }
    double total_shares = 0.0;
    for (const auto& [miner, count] : ledger.shares) {
        if (!(count >= 0.0) || !std::isfinite(count)) {
            throw std::invalid_argument("distribute_proportional: negative share count for " + miner);
        }
        total_shares += count;
    }
    if (ledger.revenue < 0) {
        throw std::invalid_argument("distribute_proportional: negative revenue");
    }
    if (total_shares <= 0.0 && ledger.revenue > 0) {
        throw std::invalid_argument("distribute_proportional: revenue but no shares");
    }

    ProportionalPayout out;
    const Satoshis fee_sat = static_cast<Satoshis>(std::llround(static_cast<double>(ledger.revenue) * fee));
    const Satoshis net = ledger.revenue - fee_sat;
    out.fee_retained = fee_sat;
    if (net == 0 || total_shares <= 0.0) {
        for (const auto& [miner, count] : ledger.shares) {
            (void)count;
            out.payouts[miner] = 0;
        }
        out.fee_retained = ledger.revenue;
        return out;
    }

    // Floor everyone, then hand the leftover satoshis to the largest
    // fractional remainders (ties broken by miner id for determinism).
    struct Slot {
        std::string miner;
        Satoshis base;
        double remainder;
    };
    std::vector<Slot> slots;
    slots.reserve(ledger.shares.size());
    Satoshis assigned = 0;
    for (const auto& [miner, count] : ledger.shares) {
        const double exact = static_cast<double>(net) * (count / total_shares);
        const double fl = std::floor(exact);
        slots.push_back(Slot{miner, static_cast<Satoshis>(fl), exact - fl});
        assigned += static_cast<Satoshis>(fl);
    }
    Satoshis leftover = net - assigned;
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        if (a.remainder != b.remainder) return a.remainder > b.remainder;
        return a.miner < b.miner;
    });
    for (auto& slot : slots) {
        if (leftover > 0) {
            ++slot.base;
            --leftover;
        }
        out.payouts[slot.miner] = slot.base;
    }
    return out;
}

double pps_rate_check(Difficulty d, double rate_btc_per_share) {
    if (!(d.value >= 1.0) || !std::isfinite(d.value)) {
        throw std::invalid_argument("pps_rate_check: difficulty must be finite and >= 1");
    }
    if (!(rate_btc_per_share >= 0.0) || !std::isfinite(rate_btc_per_share)) {
        throw std::invalid_argument("pps_rate_check: rate must be finite and >= 0");
    }
    return d.value * rate_btc_per_share;
}

double sustainable_pps_rate(const PoolLedger& ledger, double fee) {
    if (!(fee >= 0.0) || !(fee < 1.0)) {
        throw std::invalid_argument("sustainable_pps_rate: fee outside [0, 1)");
    }
    double total_shares = 0.0;
    for (const auto& [miner, count] : ledger.shares) {
        (void)miner;
        total_shares += count;
    }
    if (total_shares <= 0.0) {
        throw std::invalid_argument("sustainable_pps_rate: no shares recorded");
    }
    return sat_to_btc(ledger.revenue) * (1.0 - fee) / total_shares;
}

double expected_pool_deficit(double withhold_fraction) {
    if (!(withhold_fraction >= 0.0) || !(withhold_fraction <= 1.0)) {
        throw std::invalid_argument("expected_pool_deficit: fraction outside [0, 1]");
    }
    return 1.0 - withhold_fraction;
}

} // namespace minesim
