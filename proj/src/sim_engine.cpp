#include "minesim/sim_engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <set>
#include <stdexcept>

#include "minesim/attack_selfish.hpp"
#include "minesim/attack_withholding.hpp"
#include "minesim/core_model.hpp"

namespace minesim {

Satoshis SimResult::total_distributed() const {
    Satoshis sum = 0;
    for (const auto& [id, v] : revenue) sum += v;
    for (const auto& [id, v] : pool_fees) sum += v;
    for (const auto& [id, v] : pool_operator) sum += v;
    return sum;
}

void validate_config(const SimConfig& cfg) {
    if (cfg.total_blocks < 1) {
        throw std::invalid_argument("config: total_blocks must be >= 1");
    }
    if (!(cfg.gamma >= 0.0) || !(cfg.gamma <= 1.0)) {
        throw std::invalid_argument("config: gamma outside [0, 1]");
    }
    if (!(cfg.reward_btc > 0.0) || !std::isfinite(cfg.reward_btc)) {
        throw std::invalid_argument("config: reward_btc must be positive");
    }
    if (!(cfg.share_difficulty_ratio > 0.0) || !std::isfinite(cfg.share_difficulty_ratio)) {
        throw std::invalid_argument("config: share_difficulty_ratio must be positive");
    }
    if (!(cfg.natural_fork_rate >= 0.0) || !(cfg.natural_fork_rate < 1.0)) {
        throw std::invalid_argument("config: natural_fork_rate outside [0, 1)");
    }
    if (cfg.fork_punishment && (!(*cfg.fork_punishment >= 0.0) || !(*cfg.fork_punishment <= 1.0))) {
        throw std::invalid_argument("config: fork_punishment outside [0, 1]");
    }
    if (cfg.miners.empty()) {
        throw std::invalid_argument("config: no miners");
    }

    std::set<std::string> pool_ids;
    for (const auto& p : cfg.pools) {
        if (p.id.empty()) {
            throw std::invalid_argument("config: pool with empty id");
        }
        if (!pool_ids.insert(p.id).second) {
            throw std::invalid_argument("config: duplicate pool id " + p.id);
        }
        if (!(p.fee >= 0.0) || !(p.fee < 1.0)) {
            throw std::invalid_argument("config: pool " + p.id + " fee outside [0, 1)");
        }
        if (!(p.pps_rate >= 0.0) || !std::isfinite(p.pps_rate)) {
            throw std::invalid_argument("config: pool " + p.id + " pps_rate must be >= 0");
        }
    }

    std::set<std::string> miner_ids;
    double power_sum = 0.0;
    double cartel_power = 0.0;
    bool any_selfish = false;
    for (const auto& m : cfg.miners) {
        if (m.id.empty()) {
            throw std::invalid_argument("config: miner with empty id");
        }
        if (!miner_ids.insert(m.id).second) {
            throw std::invalid_argument("config: duplicate miner id " + m.id);
        }
        if (!(m.power_fraction >= 0.0) || !std::isfinite(m.power_fraction)) {
            throw std::invalid_argument("config: miner " + m.id + " has negative power");
        }
        power_sum += m.power_fraction;
        if (m.pool && !pool_ids.count(*m.pool)) {
            throw std::invalid_argument("config: miner " + m.id + " references unknown pool " + *m.pool);
        }
        switch (m.strategy) {
        case Strategy::Honest:
            break;
        case Strategy::WithholdInfiltrator:
            if (!m.pool) {
                throw std::invalid_argument("config: infiltrator " + m.id + " is not in a pool");
            }
            if (m.target_pool && *m.target_pool != *m.pool) {
                throw std::invalid_argument("config: infiltrator " + m.id +
                                            " targets a pool it is not a member of");
            }
            break;
        case Strategy::SelfishMember:
            any_selfish = true;
            cartel_power += m.power_fraction;
            break;
        }
    }
    if (std::fabs(power_sum - 1.0) > 1e-9) {
        throw std::invalid_argument("config: power fractions sum to " + std::to_string(power_sum) +
                                    ", expected 1");
    }
    if (any_selfish && cartel_power <= 0.0) {
        throw std::invalid_argument("config: cartel declared but its total power is zero");
    }
    if (any_selfish && cfg.natural_fork_rate > 0.0) {
        throw std::invalid_argument("config: natural forks cannot be mixed with a cartel; "
                                    "the secret-branch model assumes attack forks are the only forks");
    }
}

std::size_t next_block_owner(const std::vector<double>& powers, Rng& rng) {
    if (powers.empty()) {
        throw std::invalid_argument("next_block_owner: no miners");
    }
    double total = 0.0;
    for (double p : powers) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("next_block_owner: negative power");
        }
        total += p;
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("next_block_owner: all powers are zero");
    }
    const double u = rng.uniform() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < powers.size(); ++i) {
        cum += powers[i];
        if (u < cum) return i;
    }
    return powers.size() - 1;
}

ForkWinner resolve_fork(std::int64_t depth_a, std::int64_t depth_b) {
    if (depth_a < 0 || depth_b < 0) {
        throw std::invalid_argument("resolve_fork: negative branch depth");
    }
    if (depth_a > depth_b) return ForkWinner::BranchA;
    if (depth_b > depth_a) return ForkWinner::BranchB;
    return ForkWinner::Undecided;
}

namespace {

struct PendingBlock {
    std::int32_t owner = -1;
    std::int64_t id = -1;      // dag index, -1 when events are not recorded
    std::int64_t height = 0;
    bool punished = false;
    bool secret = false;
};

class Engine {
public:
    explicit Engine(const SimConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
        const std::size_t n = cfg.miners.size();
        strategy_.reserve(n);
        cum_power_.reserve(n);
        double cum = 0.0;
        for (const auto& m : cfg.miners) {
            strategy_.push_back(m.strategy);
            cum += m.power_fraction;
            cum_power_.push_back(cum);
        }
        total_power_ = cum;
        has_cartel_ = std::find(strategy_.begin(), strategy_.end(), Strategy::SelfishMember) !=
                      strategy_.end();

        reward_sat_ = btc_to_sat(cfg.reward_btc);
        punish_cut_ = cfg.fork_punishment
                          ? static_cast<Satoshis>(std::llround(static_cast<double>(reward_sat_) *
                                                               *cfg.fork_punishment))
                          : 0;

        result_.miner_ids.reserve(n);
        for (const auto& m : cfg.miners) result_.miner_ids.push_back(m.id);
        result_.main_by_miner.assign(n, 0);
        result_.stale_by_miner.assign(n, 0);
        result_.withheld_by_miner.assign(n, 0);
        punished_main_by_miner_.assign(n, 0);

        if (cfg.record_events) {
            result_.dag.reserve(static_cast<std::size_t>(cfg.total_blocks) + 1);
            BlockEvent genesis;
            genesis.height = 0;
            genesis.owner = -1;
            genesis.parent = -1;
            genesis.published_at = 0;
            genesis.status = BlockStatus::Main;
            result_.dag.push_back(genesis);
            tip_id_ = 0;
        }
    }

    SimResult run_all() {
        for (event_ = 1; event_ <= cfg_.total_blocks; ++event_) {
            const std::size_t owner = draw_owner();
            const Strategy st = strategy_[owner];
            if (st == Strategy::WithholdInfiltrator) {
                // The policy table says a solved block is destroyed, never shown.
                assert(apply_strategy(st, FoundKind::Block) == MinerAction::DestroyBlock);
                destroy_block(owner);
                continue;
            }
            if (has_cartel_) {
                cartel_event(owner, st);
            } else {
                honest_event(owner);
            }
        }
        finish();
        settle_shares();
        settle_revenue();
        verify_conservation();
        return std::move(result_);
    }

private:
    std::size_t draw_owner() {
        const double u = rng_.uniform() * total_power_;
        const auto it = std::upper_bound(cum_power_.begin(), cum_power_.end(), u);
        std::size_t i = static_cast<std::size_t>(it - cum_power_.begin());
        if (i >= cum_power_.size()) i = cum_power_.size() - 1;
        return i;
    }

    PendingBlock make_block(std::size_t owner, std::int64_t parent, std::int64_t height,
                            std::int64_t published_at, bool secret, bool withheld) {
        PendingBlock pb;
        pb.owner = static_cast<std::int32_t>(owner);
        pb.height = height;
        pb.secret = secret;
        if (cfg_.record_events) {
            BlockEvent ev;
            ev.height = height;
            ev.owner = pb.owner;
            ev.parent = parent;
            ev.published_at = published_at;
            ev.status = BlockStatus::Stale; // winners flip to Main when settled
            ev.was_withheld = withheld;
            ev.was_secret = secret;
            pb.id = static_cast<std::int64_t>(result_.dag.size());
            result_.dag.push_back(ev);
        }
        return pb;
    }

    void publish(PendingBlock& pb, std::int64_t at) {
        pb.secret = false;
        if (pb.id >= 0) {
            result_.dag[static_cast<std::size_t>(pb.id)].published_at = at;
        }
    }

    void mark_punished(PendingBlock& pb) {
        if (!cfg_.fork_punishment) return;
        pb.punished = true;
        if (pb.id >= 0) {
            result_.dag[static_cast<std::size_t>(pb.id)].punished = true;
        }
    }

    void destroy_block(std::size_t owner) {
        // Never enters anyone's chain; kept as a bookkeeping row only.
        make_block(owner, tip_id_, tip_height_ + 1, -1, false, true);
        result_.withheld_blocks += 1;
        result_.withheld_by_miner[owner] += 1;
    }

    void settle_main(std::vector<PendingBlock>& branch) {
        for (auto& pb : branch) {
            assert(!pb.secret);
            result_.main_blocks += 1;
            result_.main_by_miner[pb.owner] += 1;
            if (pb.punished) {
                result_.punished_main += 1;
                punished_main_by_miner_[pb.owner] += 1;
            }
            if (pb.id >= 0) {
                result_.dag[static_cast<std::size_t>(pb.id)].status = BlockStatus::Main;
            }
        }
        if (!branch.empty()) {
            tip_id_ = branch.back().id;
            tip_height_ = branch.back().height;
        }
        branch.clear();
    }

    void settle_stale(std::vector<PendingBlock>& branch) {
        for (std::size_t i = 0; i < branch.size(); ++i) {
            const auto& pb = branch[i];
            result_.stale_blocks += 1;
            result_.stale_by_miner[pb.owner] += 1;
            const bool attacker = strategy_[static_cast<std::size_t>(pb.owner)] == Strategy::SelfishMember;
            if (attacker) {
                result_.attacker_stale += 1;
            } else {
                result_.honest_stale += 1;
                // In-branch parents are the previous element; its parent is
                // stale exactly when this is not the branch root.
                if (i > 0) result_.honest_child_of_stale += 1;
            }
        }
        branch.clear();
    }

    void normal_block(std::size_t owner) {
        assert(apply_strategy(strategy_[owner], FoundKind::Block) == MinerAction::PublishBlock);
        std::vector<PendingBlock> one{make_block(owner, tip_id_, tip_height_ + 1, event_, false, false)};
        settle_main(one);
    }

    // --- honest-only network, optionally with accidental twin finds ---

    void honest_event(std::size_t owner) {
        if (nat_race_) {
            // Someone extends one of the twins; that branch wins.
            const bool extend_a = rng_.bernoulli(0.5);
            PendingBlock& win = extend_a ? nat_a_ : nat_b_;
            PendingBlock& lose = extend_a ? nat_b_ : nat_a_;
            PendingBlock next = make_block(owner, win.id, win.height + 1, event_, false, false);
            std::vector<PendingBlock> main_branch{win, next};
            std::vector<PendingBlock> stale_branch{lose};
            settle_main(main_branch);
            settle_stale(stale_branch);
            nat_race_ = false;
            return;
        }
        if (cfg_.natural_fork_rate > 0.0 && rng_.bernoulli(cfg_.natural_fork_rate)) {
            // A twin discovery lands at the same height before either
            // propagates fully. Destroyed twins never materialize.
            const std::size_t other = draw_owner();
            if (strategy_[other] == Strategy::WithholdInfiltrator) {
                destroy_block(other);
                normal_block(owner);
                return;
            }
            nat_a_ = make_block(owner, tip_id_, tip_height_ + 1, event_, false, false);
            nat_b_ = make_block(other, tip_id_, tip_height_ + 1, event_, false, false);
            mark_punished(nat_a_);
            mark_punished(nat_b_);
            nat_race_ = true;
            return;
        }
        normal_block(owner);
    }

    // --- network with a block-discarding cartel ---

    void cartel_event(std::size_t owner, Strategy st) {
        SelfishEvent ev;
        if (st == Strategy::SelfishMember) {
            assert(apply_strategy(st, FoundKind::Block) == MinerAction::ConcealBlock);
            ev = SelfishEvent::AttackerFinds;
        } else if (sm_.race) {
            ev = rng_.bernoulli(cfg_.gamma) ? SelfishEvent::HonestFindsOnRace
                                            : SelfishEvent::HonestFinds;
        } else {
            ev = SelfishEvent::HonestFinds;
        }

        if (sm_.idle() && ev == SelfishEvent::HonestFinds) {
            normal_block(owner); // no cycle open
            return;
        }

        const SelfishState pre = sm_;
        const SelfishStep step = selfish_step(sm_, ev);
        sm_ = step.state;

        // Materialize the block this event produced.
        switch (ev) {
        case SelfishEvent::AttackerFinds: {
            if (pre.race) {
                priv_.push_back(make_block(owner, priv_.back().id, priv_.back().height + 1, event_,
                                           false, false));
            } else {
                const std::int64_t parent = priv_.empty() ? tip_id_ : priv_.back().id;
                const std::int64_t height = tip_height_ + static_cast<std::int64_t>(priv_.size()) + 1;
                priv_.push_back(make_block(owner, parent, height, -1, true, false));
            }
            break;
        }
        case SelfishEvent::HonestFindsOnRace: {
            priv_.push_back(make_block(owner, priv_.back().id, priv_.back().height + 1, event_,
                                       false, false));
            break;
        }
        case SelfishEvent::HonestFinds: {
            const std::int64_t parent = hon_.empty() ? tip_id_ : hon_.back().id;
            const std::int64_t height = tip_height_ + static_cast<std::int64_t>(hon_.size()) + 1;
            hon_.push_back(make_block(owner, parent, height, event_, false, false));
            break;
        }
        }

        // Reveal previously secret blocks the machine told us to publish.
        if (step.publish > 0) {
            for (int i = 0; i < step.publish; ++i) {
                publish(priv_[static_cast<std::size_t>(published_prefix_ + i)], event_);
            }
            if (pre.lead == 1 && ev == SelfishEvent::HonestFinds) {
                // Reveal into a head-to-head tie: both contenders are contested.
                mark_punished(priv_.front());
                mark_punished(hon_.front());
            } else if (pre.lead >= 3 && ev == SelfishEvent::HonestFinds) {
                // Catch-up blocks surface at already-occupied heights.
                for (int i = 0; i < step.publish; ++i) {
                    mark_punished(priv_[static_cast<std::size_t>(published_prefix_ + i)]);
                }
            }
            published_prefix_ += step.publish;
        }

        switch (step.outcome) {
        case CycleOutcome::Continue:
            assert(sm_.private_len == static_cast<int>(priv_.size()));
            assert(sm_.honest_len == static_cast<int>(hon_.size()));
            assert(sm_.published == published_prefix_);
            break;
        case CycleOutcome::AttackerWins:
            settle_main(priv_);
            settle_stale(hon_);
            reset_cycle();
            break;
        case CycleOutcome::HonestWins:
            settle_main(hon_);
            settle_stale(priv_);
            reset_cycle();
            break;
        }
    }

    void reset_cycle() {
        sm_ = SelfishState{};
        published_prefix_ = 0;
        priv_.clear();
        hon_.clear();
    }

    void finish() {
        if (nat_race_) {
            // Horizon cut a twin race short; first-seen branch stands.
            std::vector<PendingBlock> main_branch{nat_a_};
            std::vector<PendingBlock> stale_branch{nat_b_};
            settle_main(main_branch);
            settle_stale(stale_branch);
            nat_race_ = false;
        }
        if (has_cartel_ && !sm_.idle()) {
            if (sm_.race) {
                // Unresolved tie at the horizon: score it for the honest
                // branch, the conservative choice for the attacker.
                settle_main(hon_);
                settle_stale(priv_);
            } else {
                // The private branch is strictly longer; revealing it now wins.
                for (std::size_t i = static_cast<std::size_t>(published_prefix_); i < priv_.size(); ++i) {
                    publish(priv_[i], cfg_.total_blocks);
                }
                settle_main(priv_);
                settle_stale(hon_);
            }
            reset_cycle();
        }
        result_.opportunities = cfg_.total_blocks;
    }

    void settle_shares() {
        // Shares are accounted at their expectation: power * opportunities *
        // ratio. Individual share solves are three decades more frequent
        // than blocks and carry no strategic information here; optional
        // noise restores the Poisson jitter when a test wants it.
        for (const auto& pool : cfg_.pools) {
            auto& per_miner = result_.share_ledger[pool.id];
            for (std::size_t i = 0; i < cfg_.miners.size(); ++i) {
                const auto& m = cfg_.miners[i];
                if (!m.pool || *m.pool != pool.id) continue;
                const double expected = m.power_fraction *
                                        static_cast<double>(cfg_.total_blocks) *
                                        cfg_.share_difficulty_ratio;
                double shares = expected;
                if (cfg_.share_noise && expected > 0.0) {
                    shares = static_cast<double>(sample_block_count(expected, rng_));
                }
                per_miner[m.id] = shares;
            }
        }
    }

    void settle_revenue() {
        for (const auto& m : cfg_.miners) result_.revenue[m.id] = 0;

        std::map<std::string, Satoshis> pool_gross;
        std::map<std::string, std::int64_t> pool_blocks;
        for (std::size_t i = 0; i < cfg_.miners.size(); ++i) {
            const auto& m = cfg_.miners[i];
            const Satoshis gross = reward_sat_ * result_.main_by_miner[i] -
                                   punish_cut_ * punished_main_by_miner_[i];
            result_.burned += punish_cut_ * punished_main_by_miner_[i];
            if (m.pool) {
                pool_gross[*m.pool] += gross;
                pool_blocks[*m.pool] += result_.main_by_miner[i];
            } else {
                result_.revenue[m.id] += gross;
            }
        }

        for (const auto& pool : cfg_.pools) {
            PoolLedger ledger;
            ledger.pool_id = pool.id;
            ledger.shares = result_.share_ledger[pool.id];
            ledger.blocks_found = pool_blocks[pool.id];
            ledger.revenue = pool_gross[pool.id];

            if (pool.scheme == RewardScheme::Proportional) {
                double total_shares = 0.0;
                for (const auto& [id, s] : ledger.shares) total_shares += s;
                if (total_shares <= 0.0) {
                    // Nobody proved any work; the operator keeps the rewards.
                    result_.pool_fees[pool.id] += ledger.revenue;
                    continue;
                }
                const ProportionalPayout payout = distribute_proportional(ledger, pool.fee);
                for (const auto& [id, sat] : payout.payouts) result_.revenue[id] += sat;
                result_.pool_fees[pool.id] += payout.fee_retained;
            } else {
                Satoshis paid = 0;
                for (const auto& [id, s] : ledger.shares) {
                    const Satoshis due = static_cast<Satoshis>(
                        std::llround(s * pool.pps_rate * static_cast<double>(kSatoshisPerBtc)));
                    result_.revenue[id] += due;
                    paid += due;
                }
                result_.pool_operator[pool.id] += ledger.revenue - paid;
            }
        }
    }

    void verify_conservation() {
        const Satoshis expected = reward_sat_ * result_.main_blocks;
        const Satoshis actual = result_.total_distributed() + result_.burned;
        if (actual != expected) {
            throw std::logic_error("engine: revenue conservation violated");
        }
    }

    const SimConfig& cfg_;
    Rng rng_;

    std::vector<Strategy> strategy_;
    std::vector<double> cum_power_;
    double total_power_ = 0.0;
    bool has_cartel_ = false;

    Satoshis reward_sat_ = 0;
    Satoshis punish_cut_ = 0;

    SimResult result_;
    std::vector<std::int64_t> punished_main_by_miner_;

    std::int64_t event_ = 0;
    std::int64_t tip_id_ = -1;
    std::int64_t tip_height_ = 0;

    SelfishState sm_;
    int published_prefix_ = 0;
    std::vector<PendingBlock> priv_;
    std::vector<PendingBlock> hon_;

    bool nat_race_ = false;
    PendingBlock nat_a_;
    PendingBlock nat_b_;
};

} // namespace

SimResult run(const SimConfig& config) {
    validate_config(config);
    Engine engine(config);
    return engine.run_all();
}

} // namespace minesim
