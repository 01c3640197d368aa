// Block event log serialization: one CSV row per block,
// columns height,owner,parent,status,flags. Row order is block id order, so
// the parent column indexes rows directly.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "minesim/sim_engine.hpp"

namespace minesim {

struct EventLog {
    std::vector<BlockEvent> blocks;
    std::vector<std::string> miner_ids; // owner index -> id; genesis owner is ""
};

EventLog event_log_from(const SimResult& result);

void write_event_csv(const EventLog& log, std::ostream& out);
std::string event_csv_string(const EventLog& log);

// Parses and validates; throws std::runtime_error naming the offending line.
// Also accepts the minimal external form without a flags column
// (height,owner,parent,status).
EventLog read_event_csv(std::istream& in);
EventLog read_event_csv_file(const std::string& path);

// Share/payout snapshot, columns miner,shares,payout_btc.
std::string ledger_csv_string(const std::map<std::string, double>& shares,
                              const std::map<std::string, Satoshis>& payouts);

} // namespace minesim
