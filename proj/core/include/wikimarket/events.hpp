#pragma once

// Journal records. The journal is line-delimited JSON, one record per line:
//
//   {"kind":"TradeExecuted","payload":{...},"seq":17,"ts":"2012-09-17T08:00:00.000000Z"}
//
// Keys are emitted in sorted order and money/quantities as integers
// (centi-ER$, micro-shares), so a record has exactly one serialization.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "wikimarket/timestamp.hpp"

namespace wikimarket {

enum class EventKind {
    AccountOpened,
    ProjectCreated,
    RevisionIngested,
    SharesIssued,
    OrderSubmitted,
    OrderCancelled,
    TradeExecuted,
    ExPostValueSet,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct EventRecord {
    std::uint64_t seq = 0;
    Timestamp ts;
    EventKind kind = EventKind::AccountOpened;
    nlohmann::json payload = nlohmann::json::object();

    /// Commands carry inputs and are re-executed on replay; everything else
    /// (issuance, fills, engine-initiated cancels) is re-derived and checked.
    bool is_command() const;

    nlohmann::json to_json() const;
    std::string to_line() const;  // canonical, no trailing newline

    static EventRecord from_json(const nlohmann::json& j);  // throws CorruptJournal
    static EventRecord from_line(std::string_view line);    // throws CorruptJournal

    bool operator==(const EventRecord& o) const { return to_line() == o.to_line(); }
};

}  // namespace wikimarket
