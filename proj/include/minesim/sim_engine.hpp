// Discrete-event pool simulator. One event = one full block discovery
// opportunity somewhere in the network; inter-block wall-clock time carries
// no revenue information at constant difficulty, so it is not modeled.
#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "minesim/pool_accounting.hpp"
#include "minesim/rng.hpp"

namespace minesim {

enum class Strategy {
    Honest,               // publish every solved block, submit every share
    WithholdInfiltrator,  // submit shares to the target pool, destroy solved blocks
    SelfishMember,        // cartel: conceal solved blocks on a private branch
};

struct MinerSpec {
    std::string id;
    double power_fraction = 0.0;
    Strategy strategy = Strategy::Honest;
    std::optional<std::string> pool;        // no value = solo
    std::optional<std::string> target_pool; // infiltrators only; must match `pool`
    std::optional<std::string> cartel;      // selfish members only

    bool operator==(const MinerSpec&) const = default;
};

struct SimConfig {
    std::vector<MinerSpec> miners;
    std::vector<PoolConfig> pools;
    std::int64_t total_blocks = 0;           // discovery opportunities to simulate
    double gamma = 0.5;                      // honest power share racing on the attacker branch
    double reward_btc = 25.0;
    double share_difficulty_ratio = 4294967296.0; // expected shares per opportunity, network-wide
    std::uint64_t seed = 1;
    std::optional<double> fork_punishment;   // rho: a contested block pays reward*(1-rho)
    double natural_fork_rate = 0.0;          // chance an honest find collides with a twin find
    bool share_noise = false;                // Poisson-sample the share ledger around its mean
    bool record_events = true;               // keep the full block DAG in the result

    bool operator==(const SimConfig&) const = default;
};

enum class BlockStatus { Main, Stale };

struct BlockEvent {
    std::int64_t height = 0;
    std::int32_t owner = -1;        // miner index; -1 for genesis
    std::int64_t parent = -1;       // block id (index into dag); -1 for genesis
    std::int64_t published_at = -1; // opportunity index when it went public; -1 = never
    BlockStatus status = BlockStatus::Main;
    bool was_withheld = false;      // solved and destroyed by an infiltrator
    bool was_secret = false;        // spent time concealed on a private branch
    bool punished = false;          // sat on a tied or losing public branch at some point
};

struct SimResult {
    std::vector<std::string> miner_ids;            // miner index -> id
    std::vector<BlockEvent> dag;                   // genesis at index 0; empty when !record_events
    std::map<std::string, Satoshis> revenue;       // per miner, after pool settlement
    std::map<std::string, Satoshis> pool_fees;     // proportional fee retained, per pool
    std::map<std::string, Satoshis> pool_operator; // pay-per-share operator residual (can be < 0)
    std::map<std::string, std::map<std::string, double>> share_ledger; // pool -> miner -> shares

    std::int64_t opportunities = 0;
    std::int64_t main_blocks = 0;            // excludes genesis
    std::int64_t stale_blocks = 0;           // fork losers; destroyed blocks tracked separately
    std::int64_t withheld_blocks = 0;
    std::int64_t attacker_stale = 0;         // stale blocks owned by cartel miners
    std::int64_t honest_stale = 0;
    std::int64_t honest_child_of_stale = 0;  // honest stale blocks whose parent is stale
    std::int64_t punished_main = 0;
    Satoshis burned = 0;                     // punishment deductions, never distributed
    std::vector<std::int64_t> main_by_miner;
    std::vector<std::int64_t> stale_by_miner;
    std::vector<std::int64_t> withheld_by_miner;

    Satoshis total_distributed() const;
};

// Throws std::invalid_argument when the config is inconsistent: powers not
// summing to 1, dangling pool references, infiltrators without a target,
// cartel declared with zero power, or natural forks mixed with a cartel.
void validate_config(const SimConfig& config);

SimResult run(const SimConfig& config);

// Index of the next block finder, drawn proportional to `powers`.
std::size_t next_block_owner(const std::vector<double>& powers, Rng& rng);

enum class ForkWinner { BranchA, BranchB, Undecided };

// Longest-branch rule; equal depths stay undecided until someone extends.
ForkWinner resolve_fork(std::int64_t depth_a, std::int64_t depth_b);

// Run `replicates` copies of `base`, each with a seed derived from
// (base.seed, replicate index), reduce every result to a T right away, and
// return the summaries in replicate order. The output is byte-identical for
// any `jobs`; threads only change who computes which slot.
template <typename T, typename Extract>
std::vector<T> map_replicates(const SimConfig& base, int replicates, int jobs, Extract extract) {
    if (replicates < 1) {
        throw std::invalid_argument("map_replicates: need at least one replicate");
    }
    validate_config(base);
    std::vector<T> out(static_cast<std::size_t>(replicates));
    if (jobs < 1) jobs = 1;
    if (jobs > replicates) jobs = replicates;

    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= replicates || failed.load()) return;
            try {
                SimConfig cfg = base;
                cfg.seed = Rng::derive_seed(base.seed, static_cast<std::uint64_t>(i));
                SimResult res = run(cfg);
                out[static_cast<std::size_t>(i)] = extract(res, i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(jobs));
        for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }
    if (failed.load()) std::rethrow_exception(error);
    return out;
}

} // namespace minesim
