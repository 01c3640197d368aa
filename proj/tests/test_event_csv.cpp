#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <sstream>
#include <string>

#include "minesim/event_csv.hpp"
#include "minesim/sim_engine.hpp"

using namespace minesim;

namespace {

EventLog small_log() {
    EventLog log;
    log.miner_ids = {"alice", "bob"};
    log.blocks.resize(5);
    log.blocks[0] = {0, -1, -1, 0, BlockStatus::Main, false, false, false};
    log.blocks[1] = {1, 0, 0, 1, BlockStatus::Main, false, false, false};
    log.blocks[2] = {2, 1, 1, 2, BlockStatus::Main, false, true, false};   // surfaced secret
    log.blocks[3] = {2, 0, 1, 3, BlockStatus::Stale, false, false, true};  // lost a race
    log.blocks[4] = {3, 1, 2, -1, BlockStatus::Stale, true, false, false}; // destroyed
    return log;
}

} // namespace

TEST_CASE("event csv text layout") {
    const std::string csv = event_csv_string(small_log());
    CHECK(csv ==
          "height,owner,parent,status,flags\n"
          "0,,-1,main,\n"
          "1,alice,0,main,\n"
          "2,bob,1,main,secret\n"
          "2,alice,1,stale,\n"
          "3,bob,2,stale,withheld\n");
}

TEST_CASE("event csv round trip keeps the public record") {
    const EventLog orig = small_log();
    std::stringstream buf(event_csv_string(orig));
    const EventLog back = read_event_csv(buf);

    REQUIRE(back.blocks.size() == orig.blocks.size());
    for (std::size_t i = 0; i < orig.blocks.size(); ++i) {
        const auto& a = orig.blocks[i];
        const auto& b = back.blocks[i];
        CHECK(a.height == b.height);
        CHECK(a.parent == b.parent);
        CHECK(a.status == b.status);
        CHECK(a.was_withheld == b.was_withheld);
        CHECK(a.was_secret == b.was_secret);
        // Owner identity survives via the name column.
        const std::string an = a.owner < 0 ? "" : orig.miner_ids[static_cast<std::size_t>(a.owner)];
        const std::string bn = b.owner < 0 ? "" : back.miner_ids[static_cast<std::size_t>(b.owner)];
        CHECK(an == bn);
    }
    // And writing the parsed log reproduces the text byte for byte.
    CHECK(event_csv_string(back) == event_csv_string(orig));
}

TEST_CASE("event csv write rejects unsafe inputs") {
    EventLog log = small_log();
    log.miner_ids[0] = "al,ice";
    CHECK_THROWS_AS(event_csv_string(log), std::logic_error);

    log = small_log();
    log.blocks[1].owner = 7; // no such miner
    CHECK_THROWS_AS(event_csv_string(log), std::logic_error);
}

TEST_CASE("event csv read validates line by line") {
    const auto read = [](const std::string& text) {
        std::stringstream buf(text);
        return read_event_csv(buf);
    };
    const auto error_of = [&](const std::string& text) {
        try {
            read(text);
        } catch (const std::runtime_error& e) {
            return std::string(e.what());
        }
        return std::string();
    };

    const std::string header = "height,owner,parent,status,flags\n";

    CHECK(error_of("") == "event csv line 1: missing header");
    CHECK(error_of("height,owner\n").find("line 1") != std::string::npos);
    CHECK(error_of(header + "0,,-1,main\n").find("expected 5 fields") != std::string::npos);
    CHECK(error_of(header + "x,,-1,main,\n").find("bad height") != std::string::npos);
    CHECK(error_of(header + "-1,,-1,main,\n").find("negative height") != std::string::npos);
    CHECK(error_of(header + "0,,-1,main,\n1,alice,5,main,\n").find("references a later row") !=
          std::string::npos);
    CHECK(error_of(header + "0,,-1,main,\n2,alice,0,main,\n").find("parent height + 1") !=
          std::string::npos);
    CHECK(error_of(header + "1,alice,-1,main,\n").find("height 0") != std::string::npos);
    CHECK(error_of(header + "0,,-1,orphan,\n").find("bad status 'orphan'") != std::string::npos);
    CHECK(error_of(header + "0,,-1,main,shiny\n").find("unknown flag 'shiny'") !=
          std::string::npos);
    // Errors carry the 1-based line number of the bad row.
    CHECK(error_of(header + "0,,-1,main,\n1,alice,0,main,\n3,bob,1,main,\n").find("line 4") !=
          std::string::npos);

    // Blank lines and CRLF endings are tolerated.
    const EventLog ok = read(header + "0,,-1,main,\r\n\n1,alice,0,main,\r\n");
    CHECK(ok.blocks.size() == 2);
    CHECK(ok.miner_ids == std::vector<std::string>{"alice"});
}

TEST_CASE("event csv read accepts the minimal flagless form") {
    std::stringstream buf("height,owner,parent,status\n"
                          "0,,-1,main\n"
                          "1,alice,0,main\n"
                          "1,bob,0,stale\n");
    const EventLog log = read_event_csv(buf);
    REQUIRE(log.blocks.size() == 3);
    CHECK(log.blocks[2].status == BlockStatus::Stale);
    CHECK_FALSE(log.blocks[1].was_withheld);
    CHECK_FALSE(log.blocks[1].was_secret);

    // Field counts must match the header that was given.
    std::stringstream bad("height,owner,parent,status\n0,,-1,main,\n");
    CHECK_THROWS_AS(read_event_csv(bad), std::runtime_error);
}

TEST_CASE("event csv file reader names the path") {
    try {
        read_event_csv_file("/nonexistent/events.csv");
        CHECK(false);
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("/nonexistent/events.csv") != std::string::npos);
    }
}

TEST_CASE("ledger csv lists shares and payouts per miner") {
    const std::map<std::string, double> shares{{"alice", 1200.0}, {"bob", 400.5}};
    const std::map<std::string, Satoshis> payouts{{"alice", btc_to_sat(18.75)}};
    CHECK(ledger_csv_string(shares, payouts) ==
          "miner,shares,payout_btc\n"
          "alice,1200,18.75000000\n"
          "bob,400.5,0.00000000\n");
}
