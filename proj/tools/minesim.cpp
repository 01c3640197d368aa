// Command-line front end: scenario runs, closed-form evaluation, attack
// experiments, deficit detection, and block-DAG fork analysis.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "minesim/attack_selfish.hpp"
#include "minesim/attack_withholding.hpp"
#include "minesim/core_model.hpp"
#include "minesim/detection.hpp"
#include "minesim/event_csv.hpp"
#include "minesim/scenario.hpp"

namespace {

using minesim::AuditReport;
using minesim::DetectionReport;
using ordered = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

void print_json(const ordered& j) { std::cout << j.dump(2) << "\n"; }

ordered detection_json(const DetectionReport& r) {
    ordered j;
    j["expected_blocks"] = r.expected;
    j["observed_blocks"] = r.observed;
    j["z"] = r.z;
    j["p_value"] = r.p_value;
    j["exact_tail"] = r.exact_tail;
    j["deficit_fraction"] = r.deficit_fraction;
    j["min_detectable_fraction"] = r.min_detectable_fraction;
    j["verdict"] = minesim::verdict_name(r.verdict);
    return j;
}

struct RunArgs {
    std::string scenario_path;
    std::string manifest_path;
    std::string output_dir;
    int jobs = 1;
};

int cmd_run(const RunArgs& a) {
    minesim::Scenario s = a.manifest_path.empty()
                              ? minesim::load_scenario(a.scenario_path)
                              : minesim::scenario_from_manifest(a.manifest_path);
    if (!a.output_dir.empty()) s.output_dir = a.output_dir;
    const minesim::ScenarioReport report = minesim::run_scenario(s, a.jobs);
    ordered j;
    j["name"] = s.name;
    j["directory"] = report.directory.string();
    j["files"] = report.files_written;
    print_json(j);
    return kExitOk;
}

struct FormulaArgs {
    double alpha = 0.2;
    double beta = 0.5;
};

int cmd_formulas(const FormulaArgs& a) {
    const minesim::WithholdParams p{a.alpha, a.beta};
    std::cout << "expected blocks          K = hashrate * seconds / (difficulty * 2^32)\n";
    std::cout << "count dispersion         stddev(K) = sqrt(K); relative spread 1/sqrt(K)\n";
    std::cout << "per-hash correction      binomial vs limit gap = success probability"
                 " (~5.4e-20 at 2^-64)\n";
    std::cout << "withholding gain         g(a, b) = a*b*(1-b) / (1-a)\n";
    std::cout << "  at a=" << a.alpha << ", b=" << a.beta << ": " << minesim::relative_gain(p)
              << "; optimal b = " << minesim::optimal_beta(a.alpha) << "\n";
    std::cout << "private branch premium   p(a, b) = (1 - a*(1-b)) / (1-a) - 1\n";
    std::cout << "  at a=" << a.alpha << ", b=" << a.beta << ": "
              << minesim::private_branch_premium(p) << "\n";
    std::cout << "pool deficit             income factor = 1 - f at infiltrated share f\n";
    std::cout << "secret branch threshold  t(ns) = (1-ns) / (3-2*ns)\n";
    std::cout << "  t(0) = " << minesim::profitability_threshold(0.0)
              << "; t(0.5) = " << minesim::profitability_threshold(0.5)
              << "; t(1) = " << minesim::profitability_threshold(1.0) << "\n";
    std::cout << "detection window         K_min = (z / w)^2 expected blocks"
                 " for deficit fraction w\n";
    return kExitOk;
}

struct WithholdGainArgs {
    double alpha = 0.0;
    std::optional<double> beta;
};

int cmd_withhold_gain(const WithholdGainArgs& a) {
    const double beta = a.beta ? *a.beta : minesim::optimal_beta(a.alpha);
    const minesim::WithholdParams p{a.alpha, beta};
    const double pool_infiltrated_share =
        (1.0 - a.alpha + a.alpha * beta) > 0.0
            ? a.alpha * beta / (1.0 - a.alpha + a.alpha * beta)
            : 0.0;
    ordered j;
    j["alpha"] = a.alpha;
    j["beta"] = beta;
    j["beta_is_optimal"] = !a.beta.has_value();
    j["relative_gain"] = minesim::relative_gain(p);
    j["private_branch_premium"] = minesim::private_branch_premium(p);
    j["pool_infiltrated_share"] = pool_infiltrated_share;
    j["pool_income_factor"] = minesim::expected_pool_deficit(pool_infiltrated_share);
    print_json(j);
    return kExitOk;
}

struct WithholdSimArgs {
    double alpha = 0.0;
    double beta = 0.0;
    std::int64_t blocks = 20000;
    int replicates = 8;
    std::uint64_t seed = 1;
    int jobs = 1;
};

int cmd_withhold_sim(const WithholdSimArgs& a) {
    const minesim::WithholdSummary s = minesim::run_withholding_experiment(
        minesim::WithholdParams{a.alpha, a.beta}, a.blocks, a.replicates, a.seed, a.jobs);
    ordered j;
    j["alpha"] = a.alpha;
    j["beta"] = a.beta;
    j["premium_mean"] = s.premium_mean;
    j["premium_se"] = s.premium_se;
    j["closed_form"] = s.formula;
    j["rogue_revenue_fraction"] = s.rogue_revenue_fraction;
    j["honest_revenue_fraction"] = s.honest_revenue_fraction;
    j["main_block_rate"] = s.main_block_rate;
    j["replicates"] = s.replicates;
    print_json(j);
    return kExitOk;
}

struct SelfishSimArgs {
    double alpha = 0.0;
    double gamma = 0.5;
    std::optional<double> punish;
    std::int64_t blocks = 20000;
    int replicates = 8;
    std::uint64_t seed = 1;
    int jobs = 1;
};

int cmd_selfish_sim(const SelfishSimArgs& a) {
    minesim::SelfishParams p;
    p.alpha = a.alpha;
    p.gamma = a.gamma;
    p.fork_punishment = a.punish;
    const minesim::SelfishSummary s =
        minesim::run_selfish_experiment(p, a.blocks, a.replicates, a.seed, a.jobs);
    ordered j;
    j["alpha"] = a.alpha;
    j["gamma"] = a.gamma;
    if (a.punish) j["fork_punishment"] = *a.punish;
    j["revenue_fraction_mean"] = s.revenue_fraction_mean;
    j["revenue_fraction_se"] = s.revenue_fraction_se;
    j["premium"] = s.premium;
    j["break_even_threshold"] = s.threshold;
    j["replicates"] = s.replicates;
    j["wasted"] = ordered{{"total_mined", s.split.total_mined},
                          {"attacker_stale", s.split.attacker_stale},
                          {"honest_stale", s.split.honest_stale},
                          {"honest_child_of_stale", s.split.honest_child_of_stale},
                          {"attacker_stale_fraction", s.split.attacker_stale_fraction},
                          {"honest_stale_fraction", s.split.honest_stale_fraction},
                          {"honest_child_of_stale_fraction", s.split.honest_child_of_stale_fraction}};
    print_json(j);
    return kExitOk;
}

struct ThresholdArgs {
    std::vector<double> gammas{0.0, 0.5, 1.0};
};

int cmd_selfish_threshold(const ThresholdArgs& a) {
    ordered rows = ordered::array();
    for (double g : a.gammas) {
        rows.push_back(ordered{{"honest_share_on_attacker_branch", g},
                               {"break_even_power", minesim::profitability_threshold(g)}});
    }
    print_json(rows);
    return kExitOk;
}

struct DetectArgs {
    double expected = 0.0;
    std::int64_t observed = 0;
    double suspicious = 2.0;
    double detected = 3.0;
    std::optional<double> fraction;
};

int cmd_detect(const DetectArgs& a) {
    const minesim::DetectionThresholds t{a.suspicious, a.detected};
    const DetectionReport r =
        minesim::z_test(minesim::ObservationWindow{a.expected, a.observed}, t);
    ordered j = detection_json(r);
    if (a.fraction) {
        j["min_blocks_for_fraction"] = minesim::min_blocks_to_detect(*a.fraction, a.detected);
    }
    print_json(j);
    return kExitOk;
}

struct AnalyzeArgs {
    std::string path;
    std::int64_t window = 2016;
};

int cmd_analyze_dag(const AnalyzeArgs& a) {
    const minesim::EventLog log = minesim::read_event_csv_file(a.path);
    std::cout << minesim::format_dag_stats_csv(minesim::analyze_dag(log.blocks, a.window));
    return kExitOk;
}

struct AuditArgs {
    double difficulty = 1.0;
    double rate = 0.0;
    double reward = 25.0;
    double tolerance = 0.10;
};

int cmd_audit_pps(const AuditArgs& a) {
    minesim::PoolConfig pool;
    pool.scheme = minesim::RewardScheme::PayPerShare;
    pool.pps_rate = a.rate;
    const AuditReport r = minesim::consistency_audit(pool, minesim::Difficulty{a.difficulty},
                                                     a.reward, a.tolerance);
    ordered j;
    j["difficulty"] = a.difficulty;
    j["rate_btc_per_share"] = a.rate;
    j["implied_block_payout"] = r.implied_block_payout;
    j["fair_block_payout"] = r.fair_block_payout;
    j["shortfall"] = r.shortfall;
    j["tolerance"] = a.tolerance;
    j["flagged"] = r.flagged;
    print_json(j);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mining pool strategy simulator"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run a scenario file and write its report directory");
    auto* scenario_opt = run->add_option("scenario", run_args.scenario_path, "scenario json file");
    auto* manifest_opt =
        run->add_option("--manifest", run_args.manifest_path, "rerun from a seed manifest");
    run->add_option("--output-dir", run_args.output_dir, "override the report directory");
    run->add_option("--jobs", run_args.jobs, "worker threads")->check(CLI::PositiveNumber);
    scenario_opt->excludes(manifest_opt);

    FormulaArgs formula_args;
    auto* formulas = app.add_subcommand("formulas", "print the closed forms this tool relies on");
    formulas->add_option("--alpha", formula_args.alpha, "rogue power fraction");
    formulas->add_option("--beta", formula_args.beta, "infiltrating fraction of rogue power");

    WithholdGainArgs gain_args;
    double gain_beta = 0.0;
    auto* gain = app.add_subcommand("withhold-gain", "closed-form infiltration gain");
    gain->add_option("--alpha", gain_args.alpha, "rogue power fraction")->required();
    auto* gain_beta_opt = gain->add_option("--beta", gain_beta, "infiltrating fraction (default: optimum)");

    WithholdSimArgs wsim_args;
    auto* wsim = app.add_subcommand("withhold-sim", "simulate share-submitting block destruction");
    wsim->add_option("--alpha", wsim_args.alpha, "rogue power fraction")->required();
    wsim->add_option("--beta", wsim_args.beta, "infiltrating fraction of rogue power")->required();
    wsim->add_option("--blocks", wsim_args.blocks, "opportunities per replicate");
    wsim->add_option("--replicates", wsim_args.replicates, "replicate count")
        ->check(CLI::PositiveNumber);
    wsim->add_option("--seed", wsim_args.seed, "base seed");
    wsim->add_option("--jobs", wsim_args.jobs, "worker threads")->check(CLI::PositiveNumber);

    SelfishSimArgs ssim_args;
    double ssim_punish = 0.0;
    auto* ssim = app.add_subcommand("selfish-sim", "simulate the secret-branch cartel");
    ssim->add_option("--alpha", ssim_args.alpha, "cartel power fraction")->required();
    ssim->add_option("--gamma", ssim_args.gamma, "honest share racing on the cartel branch");
    auto* punish_opt = ssim->add_option("--punish", ssim_punish, "fork punishment fraction rho");
    ssim->add_option("--blocks", ssim_args.blocks, "opportunities per replicate");
    ssim->add_option("--replicates", ssim_args.replicates, "replicate count")
        ->check(CLI::PositiveNumber);
    ssim->add_option("--seed", ssim_args.seed, "base seed");
    ssim->add_option("--jobs", ssim_args.jobs, "worker threads")->check(CLI::PositiveNumber);

    ThresholdArgs threshold_args;
    auto* threshold = app.add_subcommand("selfish-threshold", "break-even power for the cartel");
    threshold->add_option("--gamma", threshold_args.gammas,
                          "honest share values to evaluate (repeatable)");

    DetectArgs detect_args;
    auto* detect = app.add_subcommand("detect", "deficit z-test on an observation window");
    detect->add_option("--expected", detect_args.expected, "expected block count")->required();
    detect->add_option("--observed", detect_args.observed, "observed block count")->required();
    detect->add_option("--suspicious", detect_args.suspicious, "z threshold for suspicion");
    detect->add_option("--detected", detect_args.detected, "z threshold for detection");
    double detect_fraction = 0.0;
    auto* fraction_opt = detect->add_option("--fraction", detect_fraction,
                                            "also report the window needed for this deficit");

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze-dag", "fork statistics over a block event csv");
    analyze->add_option("events", analyze_args.path, "events csv file")->required();
    analyze->add_option("--window", analyze_args.window, "heights per window")
        ->check(CLI::PositiveNumber);

    AuditArgs audit_args;
    auto* audit = app.add_subcommand("audit-pps", "does a per-share quote add up to a full block");
    audit->add_option("--difficulty", audit_args.difficulty, "network difficulty")->required();
    audit->add_option("--rate", audit_args.rate, "quoted btc per difficulty-1 share")->required();
    audit->add_option("--reward", audit_args.reward, "full block reward in btc");
    audit->add_option("--tolerance", audit_args.tolerance, "shortfall attributable to fees");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) {
            if (run_args.scenario_path.empty() && run_args.manifest_path.empty()) {
                std::cerr << "config error: run needs a scenario file or --manifest\n";
                return kExitConfig;
            }
            return cmd_run(run_args);
        }
        if (formulas->parsed()) return cmd_formulas(formula_args);
        if (gain->parsed()) {
            if (gain_beta_opt->count() > 0) gain_args.beta = gain_beta;
            return cmd_withhold_gain(gain_args);
        }
        if (wsim->parsed()) return cmd_withhold_sim(wsim_args);
        if (ssim->parsed()) {
            if (punish_opt->count() > 0) ssim_args.punish = ssim_punish;
            return cmd_selfish_sim(ssim_args);
        }
        if (threshold->parsed()) return cmd_selfish_threshold(threshold_args);
        if (detect->parsed()) {
            if (fraction_opt->count() > 0) detect_args.fraction = detect_fraction;
            return cmd_detect(detect_args);
        }
        if (analyze->parsed()) return cmd_analyze_dag(analyze_args);
        if (audit->parsed()) return cmd_audit_pps(audit_args);
        std::cerr << "config error: no subcommand\n";
        return kExitConfig;
    } catch (const minesim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
