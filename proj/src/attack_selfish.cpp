#include "minesim/attack_selfish.hpp"

#include <cmath>
#include <stdexcept>

namespace minesim {

namespace {

void check_state(const SelfishState& s) {
    const bool shape_ok = s.lead >= 0 && s.private_len >= 0 && s.honest_len >= 0 &&
                          s.published >= 0 && s.published <= s.private_len;
    if (!shape_ok) {
        throw std::logic_error("selfish_step: malformed state");
    }
    if (s.race) {
        // A race is always one published attacker block against one honest block.
        if (s.lead != 0 || s.private_len != 1 || s.honest_len != 1 || s.published != 1) {
            throw std::logic_error("selfish_step: race state out of shape");
        }
    } else if (s.lead != s.private_len - s.honest_len) {
        throw std::logic_error("selfish_step: lead does not match branch lengths");
    }
}

} // namespace

SelfishStep selfish_step(const SelfishState& s, SelfishEvent ev) {
    check_state(s);
    SelfishStep out;

    switch (ev) {
    case SelfishEvent::AttackerFinds: {
        if (s.race) {
            // Extend and publish at once: the attacker branch is now longer.
            out.outcome = CycleOutcome::AttackerWins;
            return out;
        }
        out.state = s;
        out.state.private_len += 1;
        out.state.lead += 1;
        out.outcome = CycleOutcome::Continue;
        return out;
    }
    case SelfishEvent::HonestFindsOnRace: {
        if (!s.race) {
            throw std::logic_error("selfish_step: honest block on the attacker branch without a race");
        }
        // The honest finder built on the attacker's published block; that
        // branch wins with the attacker block inside it.
        out.outcome = CycleOutcome::AttackerWins;
        return out;
    }
    case SelfishEvent::HonestFinds: {
        if (s.race) {
            out.outcome = CycleOutcome::HonestWins;
            return out;
        }
        if (s.lead == 0) {
            // No cycle open: a plain main-chain block.
            out.outcome = CycleOutcome::HonestWins;
            return out;
        }
        SelfishState n = s;
        n.honest_len += 1;
        if (s.lead == 1) {
            // Answered single-block lead: reveal the secret block, race on.
            out.publish = s.private_len - s.published;
            n.published = s.private_len;
            n.lead = 0;
            n.race = true;
            out.state = n;
            out.outcome = CycleOutcome::Continue;
            return out;
        }
        if (s.lead == 2) {
            // The lead would drop to one: reveal everything, outrun the
            // public branch by one, and take the whole private branch.
            out.publish = s.private_len - s.published;
            out.outcome = CycleOutcome::AttackerWins;
            return out;
        }
        // lead >= 3: publish old blocks up to the honest height, keep the
        // fresher ones secret. Those catch-up blocks arrive long after the
        // honest blocks at the same heights, so nobody mines on them.
        out.publish = n.honest_len - s.published;
        n.published = n.honest_len;
        n.lead = s.lead - 1;
        out.state = n;
        out.outcome = CycleOutcome::Continue;
        return out;
    }
    }
    throw std::logic_error("selfish_step: unknown event");
}

double profitability_threshold(double honest_share_on_attacker_branch) {
    const double ns = honest_share_on_attacker_branch;
    if (!(ns >= 0.0) || !(ns <= 1.0)) {
        throw std::invalid_argument("profitability_threshold: share outside [0, 1]");
    }
    return (1.0 - ns) / (3.0 - 2.0 * ns);
}

SimConfig build_selfish_config(const SelfishParams& p, std::int64_t total_blocks, std::uint64_t seed) {
    if (!(p.alpha >= 0.0) || !(p.alpha <= 1.0)) {
        throw std::invalid_argument("build_selfish_config: alpha outside [0, 1]");
    }
    SimConfig cfg;
    cfg.total_blocks = total_blocks;
    cfg.seed = seed;
    cfg.gamma = p.gamma;
    cfg.fork_punishment = p.fork_punishment;
    cfg.record_events = false;
    if (p.alpha > 0.0) {
        MinerSpec cartel;
        cartel.id = "cartel";
        cartel.power_fraction = p.alpha;
        cartel.strategy = Strategy::SelfishMember;
        cartel.cartel = "cartel";
        cfg.miners.push_back(cartel);
    }
    MinerSpec honest;
    honest.id = "honest";
    honest.power_fraction = 1.0 - p.alpha;
    honest.strategy = Strategy::Honest;
    cfg.miners.push_back(honest);
    return cfg;
}

double relative_revenue(const SelfishParams& p, std::int64_t total_blocks, std::uint64_t seed) {
    const SimConfig cfg = build_selfish_config(p, total_blocks, seed);
    const SimResult res = run(cfg);
    const Satoshis total = res.total_distributed();
    if (total == 0) {
        return 0.0;
    }
    const auto it = res.revenue.find("cartel");
    const Satoshis cartel = it == res.revenue.end() ? 0 : it->second;
    return static_cast<double>(cartel) / static_cast<double>(total);
}

WastedSplit wasted_effort_split(const SimResult& result) {
    WastedSplit split;
    split.total_mined = result.main_blocks + result.stale_blocks;
    split.attacker_stale = result.attacker_stale;
    split.honest_stale = result.honest_stale;
    split.honest_child_of_stale = result.honest_child_of_stale;
    if (split.total_mined > 0) {
        const double denom = static_cast<double>(split.total_mined);
        split.attacker_stale_fraction = static_cast<double>(split.attacker_stale) / denom;
        split.honest_stale_fraction = static_cast<double>(split.honest_stale) / denom;
        split.honest_child_of_stale_fraction = static_cast<double>(split.honest_child_of_stale) / denom;
    }
    return split;
}

SelfishSummary run_selfish_experiment(const SelfishParams& p, std::int64_t blocks_per_replicate,
                                      int replicates, std::uint64_t seed, int jobs) {
    struct Rep {
        double fraction = 0.0;
        WastedSplit split;
    };
    SimConfig base = build_selfish_config(p, blocks_per_replicate, seed);
    const auto reps = map_replicates<Rep>(base, replicates, jobs, [](const SimResult& res, int) {
        Rep r;
        const Satoshis total = res.total_distributed();
        if (total > 0) {
            const auto it = res.revenue.find("cartel");
            const Satoshis cartel = it == res.revenue.end() ? 0 : it->second;
            r.fraction = static_cast<double>(cartel) / static_cast<double>(total);
        }
        r.split = wasted_effort_split(res);
        return r;
    });

    SelfishSummary summary;
    summary.replicates = replicates;
    summary.threshold = profitability_threshold(p.gamma);
    summary.split = reps.front().split;
    double mean = 0.0;
    for (const auto& r : reps) mean += r.fraction;
    mean /= static_cast<double>(replicates);
    double var = 0.0;
    for (const auto& r : reps) var += (r.fraction - mean) * (r.fraction - mean);
    if (replicates > 1) {
        var /= static_cast<double>(replicates - 1);
        summary.revenue_fraction_se = std::sqrt(var / static_cast<double>(replicates));
    }
    summary.revenue_fraction_mean = mean;
    summary.premium = mean - p.alpha;
    return summary;
}

} // namespace minesim
