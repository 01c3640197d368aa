#include "minesim/attack_withholding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace minesim {

namespace {

void check_params(const WithholdParams& p, const char* who) {
    if (!(p.alpha >= 0.0) || !(p.alpha < 1.0)) {
        throw std::invalid_argument(std::string(who) + ": alpha outside [0, 1)");
    }
    if (!(p.beta >= 0.0) || !(p.beta <= 1.0)) {
        throw std::invalid_argument(std::string(who) + ": beta outside [0, 1]");
    }
}

} // namespace

double relative_gain(const WithholdParams& p) {
    check_params(p, "relative_gain");
    return p.alpha * p.beta * (1.0 - p.beta) / (1.0 - p.alpha);
}

double private_branch_premium(const WithholdParams& p) {
    check_params(p, "private_branch_premium");
    return (1.0 - p.alpha * (1.0 - p.beta)) / (1.0 - p.alpha) - 1.0;
}

double optimal_beta(double alpha, double grid_step) {
    check_params(WithholdParams{alpha, 0.0}, "optimal_beta");
    if (!(grid_step > 0.0) || !(grid_step <= 0.5)) {
        throw std::invalid_argument("optimal_beta: grid step outside (0, 0.5]");
    }
    const int steps = static_cast<int>(std::floor(1.0 / grid_step));
    double best_beta = 0.0;
    double best_gain = relative_gain(WithholdParams{alpha, 0.0});
    for (int i = 1; i <= steps; ++i) {
        const double beta = static_cast<double>(i) * grid_step;
        if (beta > 1.0) break;
        const double g = relative_gain(WithholdParams{alpha, beta});
        if (g > best_gain) {
            best_gain = g;
            best_beta = beta;
        }
    }
    return best_beta;
}

MinerAction apply_strategy(Strategy s, FoundKind found) {
    if (found == FoundKind::Share) {
        return MinerAction::SubmitShare; // shares are the pay claim for everyone
    }
    switch (s) {
    case Strategy::Honest: return MinerAction::PublishBlock;
    case Strategy::WithholdInfiltrator: return MinerAction::DestroyBlock;
    case Strategy::SelfishMember: return MinerAction::ConcealBlock;
    }
    throw std::logic_error("apply_strategy: unknown strategy");
}

SimConfig build_withholding_config(const WithholdParams& p, std::int64_t total_blocks,
                                   std::uint64_t seed, const WithholdScenarioOptions& opt) {
    check_params(p, "build_withholding_config");
    if (opt.honest_members < 1) {
        throw std::invalid_argument("build_withholding_config: need at least one honest member");
    }
    if (opt.infiltration_splits < 1) {
        throw std::invalid_argument("build_withholding_config: need at least one infiltrator identity");
    }

    SimConfig cfg;
    cfg.total_blocks = total_blocks;
    cfg.seed = seed;
    cfg.record_events = false;

    PoolConfig pool;
    pool.id = opt.pool_id;
    pool.scheme = RewardScheme::Proportional;
    pool.fee = opt.pool_fee;
    cfg.pools.push_back(pool);

    const double honest_total = 1.0 - p.alpha;
    for (int i = 0; i < opt.honest_members; ++i) {
        MinerSpec m;
        m.id = opt.honest_members == 1 ? "member" : "member" + std::to_string(i + 1);
        m.power_fraction = honest_total / static_cast<double>(opt.honest_members);
        m.strategy = Strategy::Honest;
        m.pool = opt.pool_id;
        cfg.miners.push_back(m);
    }

    const double infiltrating = p.alpha * p.beta;
    if (infiltrating > 0.0) {
        for (int i = 0; i < opt.infiltration_splits; ++i) {
            MinerSpec m;
            m.id = opt.infiltration_splits == 1 ? "infiltrator" : "infiltrator" + std::to_string(i + 1);
            m.power_fraction = infiltrating / static_cast<double>(opt.infiltration_splits);
            m.strategy = Strategy::WithholdInfiltrator;
            m.pool = opt.pool_id;
            m.target_pool = opt.pool_id;
            cfg.miners.push_back(m);
        }
    }

    const double private_power = p.alpha * (1.0 - p.beta);
    if (private_power > 0.0) {
        MinerSpec m;
        m.id = "rogue_private";
        m.power_fraction = private_power;
        m.strategy = Strategy::Honest; // the private branch mines by the book, solo
        cfg.miners.push_back(m);
    }
    return cfg;
}

std::vector<std::string> rogue_identities(const WithholdScenarioOptions& opt) {
    std::vector<std::string> ids;
    if (opt.infiltration_splits == 1) {
        ids.push_back("infiltrator");
    } else {
        for (int i = 0; i < opt.infiltration_splits; ++i) {
            ids.push_back("infiltrator" + std::to_string(i + 1));
        }
    }
    ids.push_back("rogue_private");
    return ids;
}

double measured_relative_gain(const SimResult& result, const SimConfig& config,
                              const std::vector<std::string>& rogue_ids) {
    double rogue_power = 0.0;
    double honest_power = 0.0;
    Satoshis rogue_rev = 0;
    Satoshis honest_rev = 0;
    for (const auto& m : config.miners) {
        const bool rogue = std::find(rogue_ids.begin(), rogue_ids.end(), m.id) != rogue_ids.end();
        const auto it = result.revenue.find(m.id);
        const Satoshis rev = it == result.revenue.end() ? 0 : it->second;
        if (rogue) {
            rogue_power += m.power_fraction;
            rogue_rev += rev;
        } else {
            honest_power += m.power_fraction;
            honest_rev += rev;
        }
    }
    if (!(rogue_power > 0.0)) {
        throw std::invalid_argument("measured_relative_gain: no rogue power in config");
    }
    if (honest_rev <= 0 || !(honest_power > 0.0)) {
        throw std::invalid_argument("measured_relative_gain: honest side earned nothing");
    }
    const double rogue_rate = static_cast<double>(rogue_rev) / rogue_power;
    const double honest_rate = static_cast<double>(honest_rev) / honest_power;
    return rogue_rate / honest_rate - 1.0;
}

std::string churned_identity(const std::string& base, int window) {
    return base + "#" + std::to_string(window);
}

WithholdSummary run_withholding_experiment(const WithholdParams& p, std::int64_t blocks_per_replicate,
                                           int replicates, std::uint64_t seed, int jobs) {
    struct Rep {
        double gain = 0.0;
        double rogue_fraction = 0.0;
        double honest_fraction = 0.0;
        double main_rate = 0.0;
    };
    const WithholdScenarioOptions opt;
    const SimConfig base = build_withholding_config(p, blocks_per_replicate, seed, opt);
    const std::vector<std::string> rogue = rogue_identities(opt);

    const auto reps = map_replicates<Rep>(base, replicates, jobs, [&](const SimResult& res, int) {
        Rep r;
        r.gain = measured_relative_gain(res, base, rogue);
        const Satoshis total = res.total_distributed();
        Satoshis rogue_rev = 0;
        for (const auto& id : rogue) {
            const auto it = res.revenue.find(id);
            if (it != res.revenue.end()) rogue_rev += it->second;
        }
        if (total > 0) {
            r.rogue_fraction = static_cast<double>(rogue_rev) / static_cast<double>(total);
            r.honest_fraction = 1.0 - r.rogue_fraction;
        }
        r.main_rate = static_cast<double>(res.main_blocks) / static_cast<double>(res.opportunities);
        return r;
    });

    WithholdSummary s;
    s.replicates = replicates;
    s.formula = relative_gain(p);
    double mean = 0.0;
    for (const auto& r : reps) mean += r.gain;
    mean /= static_cast<double>(replicates);
    double var = 0.0;
    for (const auto& r : reps) var += (r.gain - mean) * (r.gain - mean);
    if (replicates > 1) {
        var /= static_cast<double>(replicates - 1);
        s.premium_se = std::sqrt(var / static_cast<double>(replicates));
    }
    s.premium_mean = mean;
    for (const auto& r : reps) {
        s.rogue_revenue_fraction += r.rogue_fraction;
        s.honest_revenue_fraction += r.honest_fraction;
        s.main_block_rate += r.main_rate;
    }
    s.rogue_revenue_fraction /= static_cast<double>(replicates);
    s.honest_revenue_fraction /= static_cast<double>(replicates);
    s.main_block_rate /= static_cast<double>(replicates);
    return s;
}

} // namespace minesim
