// Acceptance suite: end-to-end checks of the shipped behaviors, one line of
// output per check. Monte Carlo checks run on pinned seeds so a pass is
// reproducible; tolerances are stated next to each check.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "minesim/attack_selfish.hpp"
#include "minesim/attack_withholding.hpp"
#include "minesim/core_model.hpp"
#include "minesim/detection.hpp"
#include "minesim/pool_accounting.hpp"
#include "minesim/scenario.hpp"
#include "test_util.hpp"

using namespace minesim;
namespace fs = std::filesystem;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw CheckFailure(what);
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

constexpr int kJobs = 4;

// --- 01: closed forms at alpha = 0.2, beta = 0.5 ---------------------------

std::string check_closed_forms() {
    const WithholdParams p{0.2, 0.5};
    const double gain = relative_gain(p);
    const double premium = private_branch_premium(p);
    require(std::fabs(gain - 0.0625) <= 1e-12, "relative gain " + num(gain) + " != 0.0625");
    require(std::fabs(premium - 0.125) <= 1e-12,
            "private branch premium " + num(premium) + " != 0.125");
    const double infiltrated = 0.2 * 0.5 / (1.0 - 0.2 + 0.2 * 0.5);
    const double factor = expected_pool_deficit(infiltrated);
    require(std::fabs(factor - 8.0 / 9.0) <= 1e-12,
            "pool income factor " + num(factor) + " != 8/9");
    return "gain 0.0625, premium 0.125, pool factor 8/9 (tol 1e-12)";
}

// --- 02: simulated infiltration premium tracks the closed form -------------

std::string check_simulated_premium_grid() {
    const auto start = std::chrono::steady_clock::now();
    const double alphas[] = {0.1, 0.2, 0.3};
    const double betas[] = {0.25, 0.5, 0.75};
    double worst_sigmas = 0.0;
    int point = 0;
    for (double a : alphas) {
        for (double b : betas) {
            // 16 replicates x 12500 opportunities = 2e5 events per grid point.
            const WithholdSummary s = run_withholding_experiment(
                WithholdParams{a, b}, 12500, 16, 6021023 + 97 * point, kJobs);
            const double gap = std::fabs(s.premium_mean - s.formula);
            require(s.premium_se > 0.0, "degenerate standard error");
            const double sigmas = gap / s.premium_se;
            worst_sigmas = std::max(worst_sigmas, sigmas);
            require(gap < 3.0 * s.premium_se,
                    "alpha " + num(a) + " beta " + num(b) + ": measured " + num(s.premium_mean) +
                        " vs closed form " + num(s.formula) + " is " + num(sigmas) + " se away");
            ++point;
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    require(secs < 120.0, "grid took " + num(secs) + " s, budget is 120 s");
    return "9 grid points within 3 se (worst " + num(worst_sigmas) + " se, " + num(secs) + " s)";
}

// --- 03: the optimal infiltration fraction is one half ---------------------

std::string check_optimal_beta() {
    for (int i = 1; i <= 9; ++i) {
        const double alpha = 0.05 * static_cast<double>(i);
        const double best = optimal_beta(alpha, 0.01);
        require(std::fabs(best - 0.5) < 1e-9,
                "alpha " + num(alpha) + ": grid argmax " + num(best) + " != 0.5");
    }
    return "grid argmax is 0.50 for alpha 0.05 through 0.45";
}

// --- 04: secret-branch profitability flips between 20% and 30% power -------

std::string check_selfish_premium_signs() {
    const auto start = std::chrono::steady_clock::now();
    // 8 replicates x 125000 opportunities = 1e6 events per power level.
    const SelfishSummary low =
        run_selfish_experiment(SelfishParams{0.20, 0.5, {}}, 125000, 8, 31415, kJobs);
    require(low.premium < 0.0 && -low.premium >= 4.0 * low.revenue_fraction_se,
            "alpha 0.20 premium " + num(low.premium) + " (se " + num(low.revenue_fraction_se) +
                ") is not negative by 4 se");
    const SelfishSummary high =
        run_selfish_experiment(SelfishParams{0.30, 0.5, {}}, 125000, 8, 31416, kJobs);
    require(high.premium > 0.0 && high.premium >= 4.0 * high.revenue_fraction_se,
            "alpha 0.30 premium " + num(high.premium) + " (se " + num(high.revenue_fraction_se) +
                ") is not positive by 4 se");

    require(std::fabs(profitability_threshold(0.0) - 1.0 / 3.0) <= 1e-12,
            "threshold at 0 is not 1/3");
    require(std::fabs(profitability_threshold(0.5) - 0.25) <= 1e-12,
            "threshold at 0.5 is not 1/4");
    require(std::fabs(profitability_threshold(1.0)) <= 1e-12, "threshold at 1 is not 0");

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    require(secs < 300.0, "took " + num(secs) + " s, budget is 300 s");
    return "premium " + num(low.premium) + " at 0.20, " + num(high.premium) +
           " at 0.30 (each >= 4 se); thresholds 1/3, 1/4, 0 (" + num(secs) + " s)";
}

// --- 05: fork punishment pushes the break-even power up --------------------

double empirical_break_even(double rho, std::uint64_t seed) {
    // Premium as a function of cartel power, on a fixed power grid; the
    // break-even is the interpolated sign change. 4e5 events per grid point.
    const double lo = 0.20;
    const double step = 0.02;
    const int points = 15; // up to alpha = 0.48
    double prev_alpha = lo;
    double prev_premium = 0.0;
    for (int k = 0; k < points; ++k) {
        const double alpha = lo + step * static_cast<double>(k);
        SelfishParams p{alpha, 0.5, {}};
        if (rho > 0.0) p.fork_punishment = rho;
        const SelfishSummary s =
            run_selfish_experiment(p, 50000, 8, seed + static_cast<std::uint64_t>(k), kJobs);
        if (s.premium >= 0.0) {
            if (k == 0) return alpha;
            return prev_alpha + (alpha - prev_alpha) * (0.0 - prev_premium) /
                                    (s.premium - prev_premium);
        }
        prev_alpha = alpha;
        prev_premium = s.premium;
    }
    return lo + step * static_cast<double>(points - 1); // never profitable on the grid
}

std::string check_punishment_raises_break_even() {
    const double b0 = empirical_break_even(0.0, 27182);
    const double b25 = empirical_break_even(0.25, 27282);
    const double b50 = empirical_break_even(0.5, 27382);
    require(b25 >= b0, "break-even fell: " + num(b0) + " -> " + num(b25) + " at punishment 0.25");
    require(b50 >= b25, "break-even fell: " + num(b25) + " -> " + num(b50) + " at punishment 0.5");
    return "break-even power " + num(b0) + " -> " + num(b25) + " -> " + num(b50) +
           " as punishment 0 -> 0.25 -> 0.5";
}

// --- 06: block-count dispersion follows the square-root law ----------------

std::string check_dispersion() {
    for (double k : {5.0, 18.0, 100.0}) {
        Rng rng(101 + static_cast<std::uint64_t>(k));
        const int n = 100000;
        double sum = 0.0;
        double sumsq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = static_cast<double>(sample_block_count(k, rng));
            sum += x;
            sumsq += x * x;
        }
        const double mean = sum / n;
        const double var = (sumsq - sum * sum / n) / (n - 1);
        const double ratio = var / mean;
        require(ratio >= 0.97 && ratio <= 1.03,
                "variance/mean at k=" + num(k) + " is " + num(ratio));
    }
    const double rel = mining_distribution(18.0).relative_stddev();
    require(std::fabs(rel - 1.0 / std::sqrt(18.0)) <= 1e-12,
            "relative stddev at 18 is " + num(rel));
    require(std::fabs(rel - 0.2357) < 5e-5, "relative stddev at 18 not 23.57%");
    return "variance/mean in [0.97, 1.03] at k = 5, 18, 100; 23.57% spread at 18";
}

// --- 07: an 11.1% deficit hides in 18 blocks, shows in 729 ------------------

std::string check_detection_power() {
    const DetectionReport small = z_test({18.0, 16});
    require(small.z < 1.0, "z at 18 expected / 16 seen is " + num(small.z));
    require(small.verdict == Verdict::Undetectable, "small window not undetectable");

    // Power simulation: true rate 648 = 729 * (1 - 1/9), test against 729.
    const double needed = min_blocks_to_detect(1.0 / 9.0, 3.0);
    require(std::fabs(needed - 729.0) <= 1e-9, "window for 1/9 deficit is " + num(needed));
    Rng rng(973);
    int detected = 0;
    const int reps = 1000;
    for (int i = 0; i < reps; ++i) {
        const auto obs = static_cast<std::int64_t>(sample_block_count(648.0, rng));
        if (z_test({729.0, obs}).verdict == Verdict::Detected) ++detected;
    }
    require(detected * 2 >= reps,
            "detected " + std::to_string(detected) + "/1000 at the minimum window");
    return "z " + num(small.z) + " at 18 blocks; " + std::to_string(detected) +
           "/1000 detections at 729";
}

// --- 08: pay-per-share rate and block-rate arithmetic -----------------------

std::string check_pps_and_block_rate() {
    const double implied = pps_rate_check(Difficulty{1418481395.0}, 1.63026460e-8);
    require(std::fabs(implied - 23.125) <= 0.001,
            "implied payout " + num(implied) + " != 23.125 +- 0.001");
    const double k = expected_blocks(Hashrate{1.74e14}, Difficulty{1418481395.0}, 86400.0);
    require(k >= 2.4 && k <= 2.6, "daily block count " + num(k) + " outside [2.4, 2.6]");
    return "implied payout " + num(implied) + "; " + num(k) + " blocks/day at 174 TH/s";
}

// --- 09: fork statistics match a brute-force oracle --------------------------

std::string check_dag_oracle() {
    Rng rng(424243);
    const std::int64_t windows[] = {1, 5, 50, 720, 2016};
    for (int trial = 0; trial < 100; ++trial) {
        const auto dag = testutil::random_dag(rng, 6500);
        require(dag.size() <= 10001, "generated dag too large");
        const std::int64_t window = windows[rng.next_u64() % 5];
        const auto fast = analyze_dag(dag, window);
        const auto slow = testutil::naive_dag_stats(dag, window);
        require(testutil::stats_equal(fast, slow),
                "trial " + std::to_string(trial) + " (window " + std::to_string(window) +
                    ") disagrees with the brute-force walk");
    }
    const std::string csv = format_dag_stats_csv({});
    require(csv.find("blocks") != std::string::npos &&
                csv.find("wasted_pct") != std::string::npos &&
                csv.find("child_of_stale_pct") != std::string::npos,
            "csv header lacks the waste columns");
    return "100 randomized dags agree exactly, all windows";
}

// --- 10: a report reruns byte-identically from its seed manifest ------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(in.good(), "cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string check_reproducible_reports() {
    const fs::path base = fs::temp_directory_path() / "minesim_acceptance";
    fs::remove_all(base);

    Scenario s;
    s.name = "repro";
    s.replicates = 4;
    s.sim.total_blocks = 20000;
    s.sim.seed = 20260822;
    s.sim.record_events = true;
    s.attack = AttackSpec{AttackFamily::Withholding, 0.2, 0.5};

    ::setenv("MINESIM_OUTPUT_DIR", (base / "first").c_str(), 1);
    const ScenarioReport r1 = run_scenario(s, 1);

    const Scenario from_manifest =
        scenario_from_manifest((r1.directory / "seed_manifest.json").string());
    require(from_manifest == s, "manifest did not reconstruct the scenario");

    ::setenv("MINESIM_OUTPUT_DIR", (base / "second").c_str(), 1);
    const ScenarioReport r2 = run_scenario(from_manifest, kJobs);
    ::unsetenv("MINESIM_OUTPUT_DIR");

    require(r1.files_written == r2.files_written, "file lists differ");
    require(r1.files_written.size() == 4, "expected 4 report files");
    for (const auto& name : r1.files_written) {
        require(slurp(r1.directory / name) == slurp(r2.directory / name),
                name + " differs between a 1-thread and a " + std::to_string(kJobs) +
                    "-thread rerun");
    }
    fs::remove_all(base);
    return "4 files byte-identical across manifest rerun and thread counts";
}

} // namespace

int main() {
    struct Check {
        const char* name;
        std::function<std::string()> fn;
    };
    const std::vector<Check> checks = {
        {"01 closed-form gain, branch premium, pool dilution", check_closed_forms},
        {"02 simulated infiltration premium matches the closed form", check_simulated_premium_grid},
        {"03 optimal infiltration fraction is one half", check_optimal_beta},
        {"04 secret-branch premium sign flips between 20% and 30% power",
         check_selfish_premium_signs},
        {"05 fork punishment raises the break-even power", check_punishment_raises_break_even},
        {"06 block-count dispersion follows the square-root law", check_dispersion},
        {"07 deficit detection needs the predicted window", check_detection_power},
        {"08 pay-per-share quote and daily block-rate arithmetic", check_pps_and_block_rate},
        {"09 fork statistics agree with a brute-force oracle", check_dag_oracle},
        {"10 reports rerun byte-identically from their seed manifest",
         check_reproducible_reports},
    };

    int failures = 0;
    for (const auto& c : checks) {
        try {
            const std::string detail = c.fn();
            std::printf("[PASS] %s — %s\n", c.name, detail.c_str());
        } catch (const std::exception& e) {
            std::printf("[FAIL] %s — %s\n", c.name, e.what());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures == 0) {
        std::printf("acceptance: all %zu checks passed\n", checks.size());
    } else {
        std::printf("acceptance: %d of %zu checks FAILED\n", failures, checks.size());
    }
    return failures == 0 ? 0 : 1;
}
