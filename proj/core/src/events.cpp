#include "wikimarket/events.hpp"

#include <array>

#include "wikimarket/error.hpp"

namespace wikimarket {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 8> kKinds{{
    {EventKind::AccountOpened, "AccountOpened"},
    {EventKind::ProjectCreated, "ProjectCreated"},
    {EventKind::RevisionIngested, "RevisionIngested"},
    {EventKind::SharesIssued, "SharesIssued"},
    {EventKind::OrderSubmitted, "OrderSubmitted"},
    {EventKind::OrderCancelled, "OrderCancelled"},
    {EventKind::TradeExecuted, "TradeExecuted"},
    {EventKind::ExPostValueSet, "ExPostValueSet"},
}};

}  // namespace

std::string_view to_string(EventKind kind) {
    for (const auto& [k, name] : kKinds)
        if (k == kind) return name;
    return "Unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
    for (const auto& [k, name] : kKinds)
        if (name == text) return k;
    return std::nullopt;
}

bool EventRecord::is_command() const {
    switch (kind) {
        case EventKind::SharesIssued:
        case EventKind::TradeExecuted:
            return false;
        case EventKind::OrderCancelled:
            return payload.value("reason", std::string("user")) == "user";
        default:
            return true;
    }
}

nlohmann::json EventRecord::to_json() const {
    return nlohmann::json{{"seq", seq}, {"ts", to_rfc3339(ts)}, {"kind", to_string(kind)}, {"payload", payload}};
}

std::string EventRecord::to_line() const { return to_json().dump(); }

EventRecord EventRecord::from_json(const nlohmann::json& j) {
    try {
        EventRecord r;
        r.seq = j.at("seq").get<std::uint64_t>();
        r.ts = parse_rfc3339(j.at("ts").get<std::string>());
        const auto kind = parse_event_kind(j.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorCode::CorruptJournal, "unknown event kind " + j.at("kind").dump());
        r.kind = *kind;
        r.payload = j.at("payload");
        if (!r.payload.is_object()) throw Error(ErrorCode::CorruptJournal, "payload is not an object");
        return r;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptJournal) throw;
        throw Error(ErrorCode::CorruptJournal, e.what());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptJournal, e.what());
    }
}

EventRecord EventRecord::from_line(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptJournal, e.what());
    }
    return from_json(j);
}

}  // namespace wikimarket
