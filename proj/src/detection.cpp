#include "minesim/detection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "minesim/core_model.hpp"

namespace minesim {

namespace {

// Below this expectation the normal approximation to the count distribution
// is too coarse for tail work; sum the exact distribution instead.
constexpr double kExactTailBelow = 30.0;

std::string format_fixed(double v, int precision) {
    char buf[48];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
    return std::string(buf, res.ptr);
}

} // namespace

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Undetectable: return "undetectable";
    case Verdict::Suspicious: return "suspicious";
    case Verdict::Detected: return "detected";
    }
    return "unknown";
}

double gaussian_upper_tail(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

DetectionReport z_test(const ObservationWindow& w, const DetectionThresholds& t) {
    if (!(w.expected_blocks >= 0.0) || !std::isfinite(w.expected_blocks)) {
        throw std::invalid_argument("z_test: expected_blocks must be finite and >= 0");
    }
    if (w.observed_blocks < 0) {
        throw std::invalid_argument("z_test: observed_blocks must be >= 0");
    }
    if (!(t.suspicious > 0.0) || !(t.detected >= t.suspicious)) {
        throw std::invalid_argument("z_test: thresholds must satisfy 0 < suspicious <= detected");
    }

    DetectionReport r;
    r.expected = w.expected_blocks;
    r.observed = w.observed_blocks;

    if (w.expected_blocks == 0.0) {
        if (w.observed_blocks > 0) {
            throw std::invalid_argument("z_test: observed blocks with zero expectation");
        }
        r.min_detectable_fraction = std::numeric_limits<double>::infinity();
        return r; // nothing expected, nothing seen
    }

    const double sd = std::sqrt(w.expected_blocks);
    r.z = (w.expected_blocks - static_cast<double>(w.observed_blocks)) / sd;
    r.deficit_fraction = (w.expected_blocks - static_cast<double>(w.observed_blocks)) /
                         w.expected_blocks;
    r.min_detectable_fraction = t.detected / sd;

    if (w.expected_blocks < kExactTailBelow) {
        r.exact_tail = true;
        r.p_value = poisson_lower_tail(w.expected_blocks,
                                       static_cast<std::uint64_t>(w.observed_blocks));
    } else {
        r.exact_tail = false;
        r.p_value = gaussian_upper_tail(r.z);
    }

    if (r.z >= t.detected) {
        r.verdict = Verdict::Detected;
    } else if (r.z >= t.suspicious) {
        r.verdict = Verdict::Suspicious;
    }
    return r;
}

double min_blocks_to_detect(double withhold_fraction, double z_required) {
    if (!(withhold_fraction > 0.0) || !(withhold_fraction <= 1.0)) {
        throw std::invalid_argument("min_blocks_to_detect: fraction outside (0, 1]");
    }
    if (!(z_required > 0.0) || !std::isfinite(z_required)) {
        throw std::invalid_argument("min_blocks_to_detect: z must be positive");
    }
    const double ratio = z_required / withhold_fraction;
    return ratio * ratio;
}

std::vector<DagWindowStats> analyze_dag(const std::vector<BlockEvent>& dag, std::int64_t window) {
    if (window < 1) {
        throw std::invalid_argument("analyze_dag: window must be >= 1");
    }
    if (dag.empty()) {
        throw std::invalid_argument("analyze_dag: empty dag");
    }
    const auto& genesis = dag.front();
    if (genesis.height != 0 || genesis.parent != -1 || genesis.status != BlockStatus::Main) {
        throw std::invalid_argument("analyze_dag: first row is not a genesis block");
    }

    std::int64_t max_height = 0;
    std::int64_t main_tip = 0;
    for (std::size_t i = 1; i < dag.size(); ++i) {
        const auto& b = dag[i];
        if (b.was_withheld) continue; // destroyed, never part of the public record
        if (b.parent < 0 || b.parent >= static_cast<std::int64_t>(i)) {
            throw std::invalid_argument("analyze_dag: block " + std::to_string(i) +
                                        " has an unresolved parent");
        }
        const auto& p = dag[static_cast<std::size_t>(b.parent)];
        if (p.was_withheld) {
            throw std::invalid_argument("analyze_dag: block " + std::to_string(i) +
                                        " extends a destroyed block");
        }
        if (b.height != p.height + 1) {
            throw std::invalid_argument("analyze_dag: block " + std::to_string(i) +
                                        " height is not parent height + 1");
        }
        if (b.status == BlockStatus::Main) {
            if (p.status != BlockStatus::Main) {
                throw std::invalid_argument("analyze_dag: main block " + std::to_string(i) +
                                            " extends a stale block");
            }
            if (b.height != dag[static_cast<std::size_t>(main_tip)].height + 1) {
                throw std::invalid_argument("analyze_dag: main chain skips a height at block " +
                                            std::to_string(i));
            }
            main_tip = static_cast<std::int64_t>(i);
        }
        max_height = std::max(max_height, b.height);
    }

    if (max_height == 0) return {};
    const std::int64_t buckets = (max_height - 1) / window + 1;
    std::vector<DagWindowStats> stats(static_cast<std::size_t>(buckets));
    for (std::int64_t k = 0; k < buckets; ++k) {
        stats[static_cast<std::size_t>(k)].start_height = k * window + 1;
        stats[static_cast<std::size_t>(k)].end_height = std::min((k + 1) * window, max_height);
    }

    for (std::size_t i = 1; i < dag.size(); ++i) {
        const auto& b = dag[i];
        if (b.was_withheld) continue;
        auto& s = stats[static_cast<std::size_t>((b.height - 1) / window)];
        s.blocks += 1;
        if (b.status == BlockStatus::Stale) {
            s.stale += 1;
            if (dag[static_cast<std::size_t>(b.parent)].status == BlockStatus::Stale) {
                s.child_of_stale += 1;
            }
        }
    }

    for (auto& s : stats) {
        if (s.blocks > 0) {
            s.wasted_pct = 100.0 * static_cast<double>(s.stale) / static_cast<double>(s.blocks);
            s.child_of_stale_pct =
                100.0 * static_cast<double>(s.child_of_stale) / static_cast<double>(s.blocks);
        }
    }
    return stats;
}

std::string format_dag_stats_csv(const std::vector<DagWindowStats>& stats) {
    std::ostringstream out;
    out << "start_height,end_height,blocks,stale,child_of_stale,wasted_pct,child_of_stale_pct\n";
    for (const auto& s : stats) {
        out << s.start_height << ',' << s.end_height << ',' << s.blocks << ',' << s.stale << ','
            << s.child_of_stale << ',' << format_fixed(s.wasted_pct, 4) << ','
            << format_fixed(s.child_of_stale_pct, 4) << '\n';
    }
    return out.str();
}

AuditReport consistency_audit(const PoolConfig& pool, Difficulty d, double reward_btc,
                              double tolerance) {
    if (!(reward_btc > 0.0) || !std::isfinite(reward_btc)) {
        throw std::invalid_argument("consistency_audit: reward must be positive");
    }
    if (!(tolerance >= 0.0) || !(tolerance < 1.0)) {
        throw std::invalid_argument("consistency_audit: tolerance outside [0, 1)");
    }
    AuditReport r;
    r.implied_block_payout = pps_rate_check(d, pool.pps_rate);
    r.fair_block_payout = reward_btc;
    r.shortfall = 1.0 - r.implied_block_payout / reward_btc;
    r.flagged = r.shortfall > tolerance;
    return r;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("ks_two_sample: both samples must be nonempty");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());

    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t ia = 0;
    std::size_t ib = 0;
    while (ia < a.size() && ib < b.size()) {
        const double x = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= x) ++ia;
        while (ib < b.size() && b[ib] <= x) ++ib;
        d = std::max(d, std::fabs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }

    const double ne = na * nb / (na + nb);
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    // Alternating series for the limiting distribution. It only converges for
    // a statistic large enough to matter; when it fails to, the distance is
    // deep inside the null and p is 1 for any practical purpose.
    double p = 1.0;
    if (lambda > 0.0) {
        double sum = 0.0;
        double sign = 1.0;
        double prev_term = 0.0;
        bool converged = false;
        for (int j = 1; j <= 100; ++j) {
            const double term = std::exp(-2.0 * lambda * lambda * static_cast<double>(j) *
                                         static_cast<double>(j));
            sum += sign * term;
            sign = -sign;
            if (term <= 1e-12 || (j > 1 && term <= 1e-8 * prev_term)) {
                converged = true;
                break;
            }
            prev_term = term;
        }
        p = converged ? 2.0 * sum : 1.0;
    }
    return KsResult{d, std::clamp(p, 0.0, 1.0)};
}

} // namespace minesim
