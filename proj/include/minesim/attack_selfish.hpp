// Block-discarding cartel: the secret-branch state machine, its closed-form
// profitability threshold, and simulation harnesses around the engine.
#pragma once

#include <cstdint>
#include <optional>

#include "minesim/sim_engine.hpp"

namespace minesim {

// One attack cycle. The cartel keeps a private branch forked off the last
// consensus block; `lead` is how far that branch runs ahead of the honest
// public branch. `race` marks the one-vs-one published tie that forms when a
// single-block lead gets answered.
struct SelfishState {
    int lead = 0;
    bool race = false;
    int private_len = 0;  // attacker branch length this cycle
    int published = 0;    // prefix of the attacker branch already public
    int honest_len = 0;   // honest branch length this cycle

    bool idle() const { return lead == 0 && !race && private_len == 0 && honest_len == 0; }
};

enum class SelfishEvent {
    AttackerFinds,       // a cartel miner solves on the private branch
    HonestFinds,         // an honest solve extending the honest public branch
    HonestFindsOnRace,   // during a race only: an honest solve on the attacker branch
};

enum class CycleOutcome {
    Continue,      // cycle still open
    AttackerWins,  // attacker branch becomes the main chain
    HonestWins,    // honest branch becomes the main chain
};

struct SelfishStep {
    SelfishState state;   // post-event state (zeroed when the cycle closed)
    int publish = 0;      // previously secret blocks going public now, oldest first
    CycleOutcome outcome = CycleOutcome::Continue;
};

// Transition rules:
//  - idle + attacker find        -> conceal it, lead 1
//  - idle + honest find          -> no cycle, block is plain main chain
//  - lead 1 + honest find        -> reveal the secret block, start a race
//  - race + attacker find        -> extend and publish: attacker branch wins
//  - race + honest find          -> honest branch wins (the racer picked it)
//  - race + honest find on race  -> attacker branch wins with an honest tip
//  - lead 2 + honest find        -> reveal everything: attacker branch wins
//  - lead >= 3 + honest find     -> publish old blocks up to the honest
//                                   height, keep the secret tip; lead drops 1
// The published catch-up prefix arrives long after the honest blocks at those
// heights, so it attracts no honest power; only the race tie splits honest
// power (by the engine's gamma draw).
// Throws std::logic_error for events impossible under a single secret branch
// (e.g. HonestFindsOnRace with no race open).
SelfishStep selfish_step(const SelfishState& s, SelfishEvent ev);

// Revenue share below which running the secret branch loses money, as a
// function of ns = honest power share that races on the attacker branch:
// (1 - ns) / (3 - 2*ns). 1/3 at ns=0, 1/4 at ns=1/2, 0 at ns=1.
double profitability_threshold(double honest_share_on_attacker_branch);

struct SelfishParams {
    double alpha = 0.0;  // cartel power fraction
    double gamma = 0.5;  // honest share racing on the attacker branch
    std::optional<double> fork_punishment;
};

// Two-actor network: one cartel miner of power alpha, one honest solo miner
// with the rest. Fine-grained honest populations change nothing at the
// revenue level because honest policy only depends on class.
SimConfig build_selfish_config(const SelfishParams& p, std::int64_t total_blocks, std::uint64_t seed);

// Cartel share of all distributed revenue in one simulated run.
double relative_revenue(const SelfishParams& p, std::int64_t total_blocks, std::uint64_t seed);

struct WastedSplit {
    std::int64_t total_mined = 0;  // main + stale, destroyed blocks excluded
    std::int64_t attacker_stale = 0;
    std::int64_t honest_stale = 0;
    std::int64_t honest_child_of_stale = 0;
    double attacker_stale_fraction = 0.0;
    double honest_stale_fraction = 0.0;
    double honest_child_of_stale_fraction = 0.0;
};

// Who paid for the forks: stale blocks split by owner class, plus the honest
// stale blocks that extended an already-stale parent (the signature a
// secret-branch attack leaves in the public record).
WastedSplit wasted_effort_split(const SimResult& result);

struct SelfishSummary {
    double revenue_fraction_mean = 0.0;
    double revenue_fraction_se = 0.0;
    double premium = 0.0;            // revenue fraction minus power fraction
    double threshold = 0.0;          // closed-form break-even for this gamma
    int replicates = 0;
    WastedSplit split;               // from the first replicate
};

SelfishSummary run_selfish_experiment(const SelfishParams& p, std::int64_t blocks_per_replicate,
                                      int replicates, std::uint64_t seed, int jobs);

} // namespace minesim
