#pragma once

// The engine: ledger + contribution registry + exchange + instructor
// valuations, driven through one serialized command surface.
//
// Every command validates completely before it mutates anything, then
// applies its effects and hands the resulting journal records to the sink
// in order. A command that throws has changed nothing and emitted nothing,
// except when the sink itself throws: state is then ahead of the journal and
// the owner must rebuild it from the journal (the service does).

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wikimarket/contributions.hpp"
#include "wikimarket/events.hpp"
#include "wikimarket/exchange.hpp"
#include "wikimarket/ledger.hpp"

namespace wikimarket {

struct MarketConfig {
    Money endowment = Money::er(10'000);
    Money par_price = Money::er(100);
    ContributionRules contribution;
};

class EventSink {
public:
    virtual ~EventSink() = default;
    /// All records of one command, in order. Must be durable on return.
    virtual void append(std::span<const EventRecord> records) = 0;
};

class Market {
public:
    explicit Market(MarketConfig config = {}, EventSink* sink = nullptr);

    Market(const Market&) = default;
    Market& operator=(const Market&) = default;

    const MarketConfig& config() const { return config_; }

    /// Detached copies (sink == nullptr) are used for read-only snapshots.
    void set_sink(EventSink* sink) { sink_ = sink; }

    // --- commands --------------------------------------------------------
    const Account& open_account(const ParticipantId& id, std::optional<Money> endowment, Timestamp ts);
    const Project& create_project(const ParticipantId& creator, const std::string& title,
                                  const std::string& initial_text, Timestamp ts);
    IngestOutcome ingest_revision(const Revision& rev);
    SubmitResult submit_limit_order(const ParticipantId& participant, ProjectId project, Side side, Money limit,
                                    ShareQty qty, Timestamp ts);
    Cancellation cancel_order(const ParticipantId& participant, OrderId id, Timestamp ts);
    void set_ex_post_value(ProjectId project, Money value_per_share, Timestamp ts);

    /// Re-executes a journaled command record. Throws ReplayDivergence for
    /// records that are not commands.
    void apply(const EventRecord& command);

    // --- reads -----------------------------------------------------------
    const Ledger& ledger() const { return ledger_; }
    const ContributionRegistry& contributions() const { return contributions_; }
    const Exchange& exchange() const { return exchange_; }
    const std::map<ProjectId, Money>& ex_post_values() const { return ex_post_; }

    Money last_price(ProjectId project) const { return exchange_.last_price(project); }
    std::uint64_t last_seq() const { return next_seq_ - 1; }
    ProjectId next_project_id() const { return next_project_id_; }

    /// Canonical serialization of the full state: versioned, line oriented,
    /// every container in key order.
    std::string canonical_state() const;

    /// Lower-case hex SHA-256 of canonical_state().
    std::string snapshot_digest() const;

    /// Conservation, sign and book invariants; throws std::logic_error.
    void check_invariants() const;

private:
    void emit(std::vector<EventRecord>& pending, Timestamp ts, EventKind kind, nlohmann::json payload);
    void flush(std::vector<EventRecord>& pending);
    void emit_steps(std::vector<EventRecord>& pending, Timestamp ts, const std::vector<ExecutionStep>& steps);

    MarketConfig config_;
    EventSink* sink_ = nullptr;
    Ledger ledger_;
    ContributionRegistry contributions_;
    Exchange exchange_;
    std::map<ProjectId, Money> ex_post_;
    std::uint64_t next_seq_ = 1;
    ProjectId next_project_id_ = 1;
};

/// Payload builders shared with replay verification and tests.
nlohmann::json cancellation_payload(const Cancellation& c);
nlohmann::json fill_payload(const Fill& f);

/// sha256 of arbitrary bytes, lower-case hex.
std::string sha256_hex(std::string_view bytes);

}  // namespace wikimarket
