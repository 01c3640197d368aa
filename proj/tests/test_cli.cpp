#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

#ifndef MINESIM_BIN
#error "MINESIM_BIN must point at the cli binary"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

// Runs the cli with stderr dropped; stdout and the exit code come back.
CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(MINESIM_BIN) + " " + args + " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult r;
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) {
        r.out.append(buf, n);
    }
    const int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

} // namespace

TEST_CASE("cli prints its closed forms") {
    const CliResult r = run_cli("formulas --alpha 0.2 --beta 0.5");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("g(a, b) = a*b*(1-b) / (1-a)") != std::string::npos);
    CHECK(r.out.find("0.0625") != std::string::npos);
    CHECK(r.out.find("0.125") != std::string::npos);
    CHECK(r.out.find("t(ns) = (1-ns) / (3-2*ns)") != std::string::npos);
}

TEST_CASE("cli evaluates the infiltration gain") {
    const CliResult r = run_cli("withhold-gain --alpha 0.2 --beta 0.5");
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("relative_gain").get<double>() == doctest::Approx(0.0625).epsilon(1e-12));
    CHECK(j.at("private_branch_premium").get<double>() == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(j.at("pool_income_factor").get<double>() == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
    CHECK_FALSE(j.at("beta_is_optimal").get<bool>());

    // Without --beta the optimum is picked.
    const CliResult opt = run_cli("withhold-gain --alpha 0.3");
    REQUIRE(opt.exit_code == 0);
    const json jo = json::parse(opt.out);
    CHECK(jo.at("beta").get<double>() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(jo.at("beta_is_optimal").get<bool>());
}

TEST_CASE("cli break-even table") {
    const CliResult r = run_cli("selfish-threshold");
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 3);
    CHECK(j[0].at("break_even_power").get<double>() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(j[1].at("break_even_power").get<double>() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(j[2].at("break_even_power").get<double>() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cli deficit test") {
    const CliResult r = run_cli("detect --expected 729 --observed 648 --fraction 0.111111");
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("z").get<double>() == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(j.at("verdict") == "detected");
    CHECK(j.at("min_blocks_for_fraction").get<double>() == doctest::Approx(729.0).epsilon(1e-3));

    CHECK(run_cli("detect --expected 729").exit_code == 1);   // missing required flag
    CHECK(run_cli("detect --expected -1 --observed 0").exit_code == 1); // rejected input
}

TEST_CASE("cli pay-per-share audit") {
    const CliResult r =
        run_cli("audit-pps --difficulty 1418481395 --rate 1.63026460e-8");
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("implied_block_payout").get<double>() == doctest::Approx(23.125).epsilon(1e-6));
    CHECK_FALSE(j.at("flagged").get<bool>());
}

TEST_CASE("cli argument errors exit with the config code") {
    CHECK(run_cli("").exit_code == 1);              // a subcommand is required
    CHECK(run_cli("mine-faster").exit_code == 1);   // unknown subcommand
    CHECK(run_cli("--help").exit_code == 0);        // help is not an error
    CHECK(run_cli("run /nonexistent/scenario.json").exit_code == 1);
    CHECK(run_cli("run").exit_code == 1);           // neither scenario nor manifest
}

TEST_CASE("cli io errors exit with the runtime code") {
    CHECK(run_cli("analyze-dag /nonexistent/events.csv").exit_code == 2);
}

TEST_CASE("cli runs a scenario end to end") {
    const fs::path base = fs::temp_directory_path() / "minesim_cli_test";
    fs::remove_all(base);
    fs::create_directories(base);
    const fs::path scenario_path = base / "scenario.json";
    {
        std::ofstream out(scenario_path);
        out << R"({
            "name": "cli_smoke",
            "replicates": 2,
            "sim": {"total_blocks": 500, "seed": 11},
            "attack": {"family": "withholding", "alpha": 0.2, "beta": 0.5}
        })";
    }

    const fs::path report_dir = base / "report";
    const CliResult r =
        run_cli("run " + scenario_path.string() + " --output-dir " + report_dir.string() +
                " --jobs 2");
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("name") == "cli_smoke");
    CHECK(fs::exists(report_dir / "summary.json"));
    CHECK(fs::exists(report_dir / "events_r0.csv"));

    // The recorded block log feeds straight back into fork analysis.
    const CliResult dag = run_cli("analyze-dag " + (report_dir / "events_r0.csv").string() +
                                  " --window 100");
    REQUIRE(dag.exit_code == 0);
    CHECK(dag.out.find("start_height,end_height,blocks,stale,child_of_stale,wasted_pct,"
                       "child_of_stale_pct") != std::string::npos);

    // Rerunning from the manifest works through the cli as well.
    const CliResult rerun =
        run_cli("run --manifest " + (report_dir / "seed_manifest.json").string() +
                " --output-dir " + (base / "rerun").string());
    REQUIRE(rerun.exit_code == 0);
    CHECK(fs::exists(base / "rerun" / "summary.json"));

    fs::remove_all(base);
}
