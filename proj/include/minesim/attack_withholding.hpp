// Share-submitting, block-destroying infiltration: closed forms for the
// rogue premium and simulation harnesses around the engine.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "minesim/sim_engine.hpp"

namespace minesim {

struct WithholdParams {
    double alpha = 0.0;  // rogue fraction of total network power
    double beta = 0.0;   // rogue fraction diverted into infiltration
};

// Rogue income per unit power relative to an honest pool miner's, minus one:
// alpha * beta * (1 - beta) / (1 - alpha).
double relative_gain(const WithholdParams& p);

// How much more the rogue private capacity earns per unit power than the
// infiltrated pools pay theirs: (1 - alpha*(1-beta)) / (1 - alpha) - 1.
double private_branch_premium(const WithholdParams& p);

// Argmax of relative_gain over a beta grid of the given step. Deliberately a
// numeric search so the closed form gets cross-checked instead of trusted.
double optimal_beta(double alpha, double grid_step = 0.01);

enum class FoundKind { Share, Block };
enum class MinerAction { SubmitShare, PublishBlock, DestroyBlock, ConcealBlock };

// Policy table consulted by the engine at every solve.
MinerAction apply_strategy(Strategy s, FoundKind found);

struct WithholdScenarioOptions {
    std::string pool_id = "pool";
    int honest_members = 1;        // honest identities inside the infiltrated pool
    int infiltration_splits = 1;   // infiltrator identities the rogue power is spread over
    double pool_fee = 0.0;
};

// One aggregate open pool holding all honest power (1 - alpha) plus the
// infiltrating rogue power (alpha * beta); the remaining rogue power
// (alpha * (1 - beta)) mines solo on its own account.
SimConfig build_withholding_config(const WithholdParams& p, std::int64_t total_blocks,
                                   std::uint64_t seed, const WithholdScenarioOptions& opt = {});

// Ids the builder assigns, so experiments can classify revenue.
std::vector<std::string> rogue_identities(const WithholdScenarioOptions& opt);

// Measured counterpart of relative_gain: rogue income per unit power over
// honest income per unit power, minus one.
double measured_relative_gain(const SimResult& result, const SimConfig& config,
                              const std::vector<std::string>& rogue_ids);

// Per-window identity for a rotating infiltrator. Fresh names keep any
// per-identity statistics from ever accumulating.
std::string churned_identity(const std::string& base, int window);

struct WithholdSummary {
    double premium_mean = 0.0;
    double premium_se = 0.0;
    double formula = 0.0;             // closed-form relative_gain
    double rogue_revenue_fraction = 0.0;
    double honest_revenue_fraction = 0.0;
    double main_block_rate = 0.0;     // main blocks per opportunity; expect 1 - alpha*beta
    int replicates = 0;
};

WithholdSummary run_withholding_experiment(const WithholdParams& p, std::int64_t blocks_per_replicate,
                                           int replicates, std::uint64_t seed, int jobs);

} // namespace minesim
