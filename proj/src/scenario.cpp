#include "minesim/scenario.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "minesim/attack_selfish.hpp"
#include "minesim/attack_withholding.hpp"
#include "minesim/event_csv.hpp"

namespace minesim {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
        }
    }
}

template <typename T>
T get_as(const json& obj, const char* key, const char* where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(where) + ": bad value for '" + key + "': " + e.what());
    }
}

template <typename T>
T get_or(const json& obj, const char* key, const char* where, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    return get_as<T>(obj, key, where);
}

Strategy strategy_from_name(const std::string& s, const char* where) {
    if (s == "honest") return Strategy::Honest;
    if (s == "withhold_infiltrator") return Strategy::WithholdInfiltrator;
    if (s == "selfish_member") return Strategy::SelfishMember;
    throw ConfigError(std::string(where) + ": unknown strategy '" + s + "'");
}

const char* strategy_name(Strategy s) {
    switch (s) {
    case Strategy::Honest: return "honest";
    case Strategy::WithholdInfiltrator: return "withhold_infiltrator";
    case Strategy::SelfishMember: return "selfish_member";
    }
    return "honest";
}

RewardScheme scheme_from_name(const std::string& s, const char* where) {
    if (s == "proportional") return RewardScheme::Proportional;
    if (s == "pay_per_share") return RewardScheme::PayPerShare;
    throw ConfigError(std::string(where) + ": unknown scheme '" + s + "'");
}

const char* scheme_name(RewardScheme s) {
    return s == RewardScheme::Proportional ? "proportional" : "pay_per_share";
}

AttackFamily family_from_name(const std::string& s, const char* where) {
    if (s == "withholding") return AttackFamily::Withholding;
    if (s == "selfish") return AttackFamily::Selfish;
    throw ConfigError(std::string(where) + ": unknown attack family '" + s + "'");
}

const char* family_name(AttackFamily f) {
    return f == AttackFamily::Withholding ? "withholding" : "selfish";
}

SimConfig sim_from_json(const json& j) {
    check_keys(j,
               {"total_blocks", "gamma", "reward_btc", "share_difficulty_ratio", "seed",
                "fork_punishment", "natural_fork_rate", "share_noise", "record_events", "miners",
                "pools"},
               "sim");
    if (!j.contains("total_blocks")) {
        throw ConfigError("sim: missing required key 'total_blocks'");
    }
    SimConfig cfg;
    cfg.total_blocks = get_as<std::int64_t>(j, "total_blocks", "sim");
    cfg.gamma = get_or<double>(j, "gamma", "sim", cfg.gamma);
    cfg.reward_btc = get_or<double>(j, "reward_btc", "sim", cfg.reward_btc);
    cfg.share_difficulty_ratio =
        get_or<double>(j, "share_difficulty_ratio", "sim", cfg.share_difficulty_ratio);
    cfg.seed = get_or<std::uint64_t>(j, "seed", "sim", cfg.seed);
    if (j.contains("fork_punishment") && !j.at("fork_punishment").is_null()) {
        cfg.fork_punishment = get_as<double>(j, "fork_punishment", "sim");
    }
    cfg.natural_fork_rate = get_or<double>(j, "natural_fork_rate", "sim", cfg.natural_fork_rate);
    cfg.share_noise = get_or<bool>(j, "share_noise", "sim", cfg.share_noise);
    cfg.record_events = get_or<bool>(j, "record_events", "sim", cfg.record_events);

    if (j.contains("miners")) {
        if (!j.at("miners").is_array()) throw ConfigError("sim: 'miners' must be an array");
        for (const auto& m : j.at("miners")) {
            check_keys(m, {"id", "power", "strategy", "pool", "target_pool", "cartel"}, "miner");
            MinerSpec spec;
            spec.id = get_as<std::string>(m, "id", "miner");
            spec.power_fraction = get_as<double>(m, "power", "miner");
            spec.strategy =
                strategy_from_name(get_or<std::string>(m, "strategy", "miner", "honest"), "miner");
            if (m.contains("pool") && !m.at("pool").is_null()) {
                spec.pool = get_as<std::string>(m, "pool", "miner");
            }
            if (m.contains("target_pool") && !m.at("target_pool").is_null()) {
                spec.target_pool = get_as<std::string>(m, "target_pool", "miner");
            }
            if (m.contains("cartel") && !m.at("cartel").is_null()) {
                spec.cartel = get_as<std::string>(m, "cartel", "miner");
            }
            cfg.miners.push_back(std::move(spec));
        }
    }
    if (j.contains("pools")) {
        if (!j.at("pools").is_array()) throw ConfigError("sim: 'pools' must be an array");
        for (const auto& p : j.at("pools")) {
            check_keys(p, {"id", "scheme", "fee", "pps_rate"}, "pool");
            PoolConfig pool;
            pool.id = get_as<std::string>(p, "id", "pool");
            pool.scheme =
                scheme_from_name(get_or<std::string>(p, "scheme", "pool", "proportional"), "pool");
            pool.fee = get_or<double>(p, "fee", "pool", 0.0);
            pool.pps_rate = get_or<double>(p, "pps_rate", "pool", 0.0);
            cfg.pools.push_back(std::move(pool));
        }
    }
    return cfg;
}

ordered sim_to_json(const SimConfig& cfg) {
    ordered j;
    j["total_blocks"] = cfg.total_blocks;
    j["gamma"] = cfg.gamma;
    j["reward_btc"] = cfg.reward_btc;
    j["share_difficulty_ratio"] = cfg.share_difficulty_ratio;
    j["seed"] = cfg.seed;
    if (cfg.fork_punishment) j["fork_punishment"] = *cfg.fork_punishment;
    j["natural_fork_rate"] = cfg.natural_fork_rate;
    j["share_noise"] = cfg.share_noise;
    j["record_events"] = cfg.record_events;
    j["miners"] = ordered::array();
    for (const auto& m : cfg.miners) {
        ordered spec;
        spec["id"] = m.id;
        spec["power"] = m.power_fraction;
        spec["strategy"] = strategy_name(m.strategy);
        if (m.pool) spec["pool"] = *m.pool;
        if (m.target_pool) spec["target_pool"] = *m.target_pool;
        if (m.cartel) spec["cartel"] = *m.cartel;
        j["miners"].push_back(std::move(spec));
    }
    j["pools"] = ordered::array();
    for (const auto& p : cfg.pools) {
        ordered pool;
        pool["id"] = p.id;
        pool["scheme"] = scheme_name(p.scheme);
        pool["fee"] = p.fee;
        pool["pps_rate"] = p.pps_rate;
        j["pools"].push_back(std::move(pool));
    }
    return j;
}

Scenario scenario_from_json(const json& j) {
    check_keys(j, {"name", "replicates", "output_dir", "sim", "attack", "detection"}, "scenario");
    if (!j.contains("name")) throw ConfigError("scenario: missing required key 'name'");
    if (!j.contains("sim")) throw ConfigError("scenario: missing required key 'sim'");

    Scenario s;
    s.name = get_as<std::string>(j, "name", "scenario");
    if (s.name.empty()) throw ConfigError("scenario: name must be nonempty");
    s.replicates = get_or<int>(j, "replicates", "scenario", 1);
    if (s.replicates < 1) throw ConfigError("scenario: replicates must be >= 1");
    if (j.contains("output_dir") && !j.at("output_dir").is_null()) {
        s.output_dir = get_as<std::string>(j, "output_dir", "scenario");
    }
    s.sim = sim_from_json(j.at("sim"));
    if (j.contains("attack") && !j.at("attack").is_null()) {
        const auto& a = j.at("attack");
        check_keys(a, {"family", "alpha", "beta"}, "attack");
        AttackSpec spec;
        spec.family = family_from_name(get_as<std::string>(a, "family", "attack"), "attack");
        spec.alpha = get_as<double>(a, "alpha", "attack");
        spec.beta = get_or<double>(a, "beta", "attack", 0.0);
        s.attack = spec;
    }
    if (j.contains("detection")) {
        const auto& d = j.at("detection");
        check_keys(d, {"suspicious", "detected"}, "detection");
        s.detection.suspicious = get_or<double>(d, "suspicious", "detection", s.detection.suspicious);
        s.detection.detected = get_or<double>(d, "detected", "detection", s.detection.detected);
    }
    return s;
}

ordered scenario_to_json(const Scenario& s) {
    ordered j;
    j["name"] = s.name;
    j["replicates"] = s.replicates;
    if (s.output_dir) j["output_dir"] = *s.output_dir;
    j["sim"] = sim_to_json(s.sim);
    if (s.attack) {
        ordered a;
        a["family"] = family_name(s.attack->family);
        a["alpha"] = s.attack->alpha;
        a["beta"] = s.attack->beta;
        j["attack"] = std::move(a);
    }
    j["detection"] = ordered{{"suspicious", s.detection.suspicious},
                             {"detected", s.detection.detected}};
    return j;
}

std::string format_fraction(double v) {
    char buf[48];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 9);
    return std::string(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out.good()) throw std::runtime_error("failed writing " + path.string());
}

} // namespace

Scenario scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario json: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("scenario json: top level must be an object");
    return scenario_from_json(j);
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return scenario_from_json_text(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string scenario_to_json_text(const Scenario& s) {
    return scenario_to_json(s).dump(2) + "\n";
}

SimConfig effective_config(const Scenario& s) {
    if (!s.attack) {
        if (s.sim.miners.empty()) {
            throw ConfigError("scenario '" + s.name + "': no miners and no attack to generate them");
        }
        return s.sim;
    }
    if (!s.sim.miners.empty()) {
        throw ConfigError("scenario '" + s.name + "': give either explicit miners or an attack, not both");
    }
    SimConfig out = s.sim;
    if (s.attack->family == AttackFamily::Withholding) {
        const SimConfig built = build_withholding_config(
            WithholdParams{s.attack->alpha, s.attack->beta}, s.sim.total_blocks, s.sim.seed);
        out.miners = built.miners;
        out.pools = built.pools;
    } else {
        const SimConfig built = build_selfish_config(
            SelfishParams{s.attack->alpha, s.sim.gamma, s.sim.fork_punishment}, s.sim.total_blocks,
            s.sim.seed);
        out.miners = built.miners;
        out.pools = built.pools;
    }
    return out;
}

std::filesystem::path report_directory(const Scenario& s) {
    if (s.output_dir) return std::filesystem::path(*s.output_dir);
    if (const char* env = std::getenv("MINESIM_OUTPUT_DIR")) {
        return std::filesystem::path(env) / s.name;
    }
    return std::filesystem::path("out") / s.name;
}

Scenario scenario_from_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("scenario")) {
        throw ConfigError(path + ": not a seed manifest (missing 'scenario')");
    }
    try {
        return scenario_from_json(j.at("scenario"));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

ScenarioReport run_scenario(const Scenario& s, int jobs) {
    const SimConfig cfg = effective_config(s);

    // Identities whose take the report tracks: generated attack configs have
    // well-known ids; explicit configs fall back to non-honest strategies.
    std::vector<std::string> focus;
    if (s.attack) {
        if (s.attack->family == AttackFamily::Withholding) {
            focus = rogue_identities(WithholdScenarioOptions{});
        } else {
            focus = {"cartel"};
        }
    } else {
        for (const auto& m : cfg.miners) {
            if (m.strategy != Strategy::Honest) focus.push_back(m.id);
        }
    }

    struct RepRow {
        std::int64_t main = 0;
        std::int64_t stale = 0;
        std::int64_t withheld = 0;
        double focus_fraction = 0.0;
        std::vector<double> pool_expected;
        std::vector<std::int64_t> pool_observed;
    };

    SimConfig stats_cfg = cfg;
    stats_cfg.record_events = false; // draws are unchanged; only the dag rows are skipped
    const std::vector<RepRow> rows = map_replicates<RepRow>(
        stats_cfg, s.replicates, jobs, [&](const SimResult& res, int) {
            RepRow row;
            row.main = res.main_blocks;
            row.stale = res.stale_blocks;
            row.withheld = res.withheld_blocks;
            Satoshis focus_sat = 0;
            for (const auto& id : focus) {
                const auto it = res.revenue.find(id);
                if (it != res.revenue.end()) focus_sat += it->second;
            }
            const Satoshis total = res.total_distributed();
            row.focus_fraction =
                total > 0 ? static_cast<double>(focus_sat) / static_cast<double>(total) : 0.0;
            for (const auto& pool : cfg.pools) {
                double power = 0.0;
                std::int64_t observed = 0;
                for (std::size_t i = 0; i < cfg.miners.size(); ++i) {
                    const auto& m = cfg.miners[i];
                    if (m.pool && *m.pool == pool.id) {
                        power += m.power_fraction;
                        observed += res.main_by_miner[i];
                    }
                }
                row.pool_expected.push_back(power * static_cast<double>(res.opportunities));
                row.pool_observed.push_back(observed);
            }
            return row;
        });

    const std::filesystem::path dir = report_directory(s);
    std::filesystem::create_directories(dir);
    ScenarioReport report;
    report.directory = dir;

    // replicates.csv
    {
        std::ostringstream csv;
        csv << "replicate,seed,main_blocks,stale_blocks,withheld_blocks,attacker_revenue_fraction\n";
        for (int i = 0; i < s.replicates; ++i) {
            const auto& row = rows[static_cast<std::size_t>(i)];
            csv << i << ',' << Rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(i)) << ','
                << row.main << ',' << row.stale << ',' << row.withheld << ','
                << format_fraction(row.focus_fraction) << '\n';
        }
        write_file(dir / "replicates.csv", csv.str());
        report.files_written.push_back("replicates.csv");
    }

    // summary.json
    {
        const double n = static_cast<double>(s.replicates);
        double mean = 0.0;
        for (const auto& row : rows) mean += row.focus_fraction;
        mean /= n;
        double var = 0.0;
        for (const auto& row : rows) {
            var += (row.focus_fraction - mean) * (row.focus_fraction - mean);
        }
        const double se = s.replicates > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;

        double main_mean = 0.0;
        double stale_mean = 0.0;
        double withheld_mean = 0.0;
        for (const auto& row : rows) {
            main_mean += static_cast<double>(row.main);
            stale_mean += static_cast<double>(row.stale);
            withheld_mean += static_cast<double>(row.withheld);
        }
        main_mean /= n;
        stale_mean /= n;
        withheld_mean /= n;

        ordered summary;
        summary["name"] = s.name;
        summary["replicates"] = s.replicates;
        summary["attacker_revenue_fraction"] =
            ordered{{"mean", mean}, {"se", se}};
        summary["main_blocks_mean"] = main_mean;
        summary["stale_blocks_mean"] = stale_mean;
        summary["withheld_blocks_mean"] = withheld_mean;
        if (!cfg.pools.empty()) {
            ordered detection = ordered::object();
            for (std::size_t pi = 0; pi < cfg.pools.size(); ++pi) {
                ObservationWindow w;
                for (const auto& row : rows) {
                    w.expected_blocks += row.pool_expected[pi];
                    w.observed_blocks += row.pool_observed[pi];
                }
                const DetectionReport dr = z_test(w, s.detection);
                detection[cfg.pools[pi].id] =
                    ordered{{"expected_blocks", dr.expected}, {"observed_blocks", dr.observed},
                            {"z", dr.z},                      {"p_value", dr.p_value},
                            {"exact_tail", dr.exact_tail},    {"verdict", verdict_name(dr.verdict)}};
            }
            summary["block_deficit"] = std::move(detection);
        }
        summary["scenario"] = scenario_to_json(s);
        write_file(dir / "summary.json", summary.dump(2) + "\n");
        report.files_written.push_back("summary.json");
    }

    // seed_manifest.json
    {
        ordered manifest;
        manifest["base_seed"] = cfg.seed;
        manifest["replicates"] = s.replicates;
        ordered seeds = ordered::array();
        for (int i = 0; i < s.replicates; ++i) {
            seeds.push_back(Rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        }
        manifest["derived_seeds"] = std::move(seeds);
        manifest["scenario"] = scenario_to_json(s);
        write_file(dir / "seed_manifest.json", manifest.dump(2) + "\n");
        report.files_written.push_back("seed_manifest.json");
    }

    // events_r0.csv: full block record of the first replicate
    if (cfg.record_events) {
        SimConfig first = cfg;
        first.seed = Rng::derive_seed(cfg.seed, 0);
        const SimResult res = run(first);
        write_file(dir / "events_r0.csv", event_csv_string(event_log_from(res)));
        report.files_written.push_back("events_r0.csv");
    }

    return report;
}

} // namespace minesim
