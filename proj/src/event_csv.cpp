#include "minesim/event_csv.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace minesim {

namespace {

const char* kHeader = "height,owner,parent,status,flags";
// Header-only exports from other tools carry no flags column; accept those too.
const char* kMinimalHeader = "height,owner,parent,status";

std::string format_btc(Satoshis s) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), sat_to_btc(s),
                                   std::chars_format::fixed, 8);
    return std::string(buf, res.ptr);
}

std::string format_shares(double s) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), s, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw std::runtime_error("event csv line " + std::to_string(line) + ": " + what);
}

std::int64_t parse_i64(const std::string& field, std::size_t line, const char* name) {
    std::int64_t v = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
        fail(line, std::string("bad ") + name + " '" + field + "'");
    }
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

} // namespace

EventLog event_log_from(const SimResult& result) {
    return EventLog{result.dag, result.miner_ids};
}

void write_event_csv(const EventLog& log, std::ostream& out) {
    out << kHeader << '\n';
    for (const auto& b : log.blocks) {
        std::string owner;
        if (b.owner >= 0) {
            if (static_cast<std::size_t>(b.owner) >= log.miner_ids.size()) {
                throw std::logic_error("event csv: owner index out of range");
            }
            owner = log.miner_ids[static_cast<std::size_t>(b.owner)];
            if (owner.find(',') != std::string::npos || owner.find('\n') != std::string::npos) {
                throw std::logic_error("event csv: miner id '" + owner + "' not CSV-safe");
            }
        }
        std::string flags;
        if (b.was_withheld) flags = "withheld";
        if (b.was_secret) {
            if (!flags.empty()) flags += ';';
            flags += "secret";
        }
        out << b.height << ',' << owner << ',' << b.parent << ','
            << (b.status == BlockStatus::Main ? "main" : "stale") << ',' << flags << '\n';
    }
}

std::string event_csv_string(const EventLog& log) {
    std::ostringstream out;
    write_event_csv(log, out);
    return out.str();
}

EventLog read_event_csv(std::istream& in) {
    EventLog log;
    std::map<std::string, std::int32_t> owner_index;
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(in, line)) {
        throw std::runtime_error("event csv line 1: missing header");
    }
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t columns = 0;
    if (line == kHeader) {
        columns = 5;
    } else if (line == kMinimalHeader) {
        columns = 4;
    } else {
        fail(lineno, "expected header '" + std::string(kHeader) + "' or '" +
                         std::string(kMinimalHeader) + "', got '" + line + "'");
    }

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != columns) {
            fail(lineno, "expected " + std::to_string(columns) + " fields, got " +
                             std::to_string(fields.size()));
        }
        BlockEvent b;
        b.height = parse_i64(fields[0], lineno, "height");
        if (b.height < 0) fail(lineno, "negative height");

        if (fields[1].empty()) {
            b.owner = -1;
        } else {
            auto [it, inserted] = owner_index.try_emplace(
                fields[1], static_cast<std::int32_t>(log.miner_ids.size()));
            if (inserted) log.miner_ids.push_back(fields[1]);
            b.owner = it->second;
        }

        b.parent = parse_i64(fields[2], lineno, "parent");
        if (b.parent < -1) fail(lineno, "parent index below -1");
        if (b.parent >= static_cast<std::int64_t>(log.blocks.size())) {
            fail(lineno, "parent " + fields[2] + " references a later row");
        }
        if (b.parent >= 0) {
            const auto& p = log.blocks[static_cast<std::size_t>(b.parent)];
            if (b.height != p.height + 1) {
                fail(lineno, "height " + fields[0] + " is not parent height + 1");
            }
        } else if (b.height != 0) {
            fail(lineno, "parentless block must sit at height 0");
        }

        if (fields[3] == "main") {
            b.status = BlockStatus::Main;
        } else if (fields[3] == "stale") {
            b.status = BlockStatus::Stale;
        } else {
            fail(lineno, "bad status '" + fields[3] + "'");
        }

        if (columns == 5 && !fields[4].empty()) {
            for (const auto& flag : split(fields[4], ';')) {
                if (flag == "withheld") {
                    b.was_withheld = true;
                } else if (flag == "secret") {
                    b.was_secret = true;
                } else {
                    fail(lineno, "unknown flag '" + flag + "'");
                }
            }
        }
        log.blocks.push_back(b);
    }
    return log;
}

EventLog read_event_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    try {
        return read_event_csv(in);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::string ledger_csv_string(const std::map<std::string, double>& shares,
                              const std::map<std::string, Satoshis>& payouts) {
    std::ostringstream out;
    out << "miner,shares,payout_btc\n";
    for (const auto& [id, s] : shares) {
        const auto it = payouts.find(id);
        const Satoshis paid = it == payouts.end() ? 0 : it->second;
        out << id << ',' << format_shares(s) << ',' << format_btc(paid) << '\n';
    }
    return out.str();
}

} // namespace minesim
