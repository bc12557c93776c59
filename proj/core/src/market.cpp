#include "wikimarket/market.hpp"

#include <openssl/evp.h>

#include <sstream>
#include <stdexcept>

#include "wikimarket/error.hpp"

namespace wikimarket {

namespace {

using nlohmann::json;

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
        if (len == 0 || i + len > s.size()) return false;
        for (std::size_t k = 1; k < len; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
        }
        i += len;
    }
    return true;
}

void require_text(std::string_view what, std::string_view s) {
    if (!valid_utf8(s)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not valid UTF-8");
}

// length-prefixed so arbitrary bytes cannot forge field boundaries
void put(std::ostringstream& os, std::string_view s) { os << s.size() << ':' << s; }

template <typename T>
T field(const json& payload, const char* key) {
    try {
        return payload.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptJournal, std::string("payload field '") + key + "': " + e.what());
    }
}

}  // namespace

nlohmann::json cancellation_payload(const Cancellation& c) {
    return json{{"order_id", c.order},
                {"participant", c.participant},
                {"project", c.project},
                {"side", to_string(c.side)},
                {"remaining_micro", c.remaining.micro},
                {"released_centi", c.released_cash.centi},
                {"released_micro", c.released_shares.micro},
                {"reason", to_string(c.reason)}};
}

nlohmann::json fill_payload(const Fill& f) {
    return json{{"trade_id", f.trade_id},
                {"project", f.project},
                {"buyer", f.buyer},
                {"seller", f.seller},
                {"buy_order", f.buy_order},
                {"sell_order", f.sell_order},
                {"price_centi", f.price.centi},
                {"qty_micro", f.qty.micro},
                {"notional_centi", f.notional.centi},
                {"buyer_refund_centi", f.buyer_refund.centi},
                {"buyer_topup_centi", f.buyer_topup.centi}};
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("EVP_Digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

Market::Market(MarketConfig config, EventSink* sink)
    : config_(config), sink_(sink), contributions_(config.contribution), exchange_(config.par_price) {
    if (config_.par_price.centi <= 0) throw Error(ErrorCode::InvalidConfig, "par price must be positive");
    if (config_.endowment.centi < 0) throw Error(ErrorCode::InvalidConfig, "endowment must be non-negative");
    if (config_.contribution.issuance.unit_bytes <= 0 || config_.contribution.issuance.unit_value.centi < 0) {
        throw Error(ErrorCode::InvalidConfig, "issuance rule");
    }
}

void Market::emit(std::vector<EventRecord>& pending, Timestamp ts, EventKind kind, nlohmann::json payload) {
    EventRecord r;
    r.seq = next_seq_++;
    r.ts = ts;
    r.kind = kind;
    r.payload = std::move(payload);
    pending.push_back(std::move(r));
}

void Market::flush(std::vector<EventRecord>& pending) {
    if (sink_ != nullptr && !pending.empty()) sink_->append(pending);
}

void Market::emit_steps(std::vector<EventRecord>& pending, Timestamp ts, const std::vector<ExecutionStep>& steps) {
    for (const auto& step : steps) {
        if (const auto* c = std::get_if<Cancellation>(&step)) {
            emit(pending, ts, EventKind::OrderCancelled, cancellation_payload(*c));
        } else {
            emit(pending, ts, EventKind::TradeExecuted, fill_payload(std::get<Fill>(step)));
        }
    }
}

const Account& Market::open_account(const ParticipantId& id, std::optional<Money> endowment, Timestamp ts) {
    if (id.empty()) throw Error(ErrorCode::InvalidArgument, "empty participant id");
    require_text("participant id", id);
    const Money amount = endowment.value_or(config_.endowment);
    const Account& a = ledger_.open_account(id, amount);

    std::vector<EventRecord> pending;
    emit(pending, ts, EventKind::AccountOpened, json{{"participant", id}, {"endowment_centi", amount.centi}});
    flush(pending);
    return a;
}

const Project& Market::create_project(const ParticipantId& creator, const std::string& title,
                                      const std::string& initial_text, Timestamp ts) {
    if (title.empty()) throw Error(ErrorCode::InvalidArgument, "empty project title");
    require_text("title", title);
    require_text("project text", initial_text);
    if (!ledger_.has_account(creator)) throw Error(ErrorCode::UnknownParticipant, "no participant " + creator);
    if (contributions_.has_title(title)) throw Error(ErrorCode::DuplicateTitle, title);

    const ProjectId id = next_project_id_;
    const Project& p = contributions_.create_project(ledger_, id, creator, title, initial_text, ts);
    ++next_project_id_;
    exchange_.register_project(id);

    std::vector<EventRecord> pending;
    emit(pending, ts, EventKind::ProjectCreated,
         json{{"project", id}, {"creator", creator}, {"title", title}, {"text", initial_text}});
    const ShareQty grant = contributions_.rules().founder_grant;
    if (grant.micro > 0) {
        emit(pending, ts, EventKind::SharesIssued,
             json{{"participant", creator},
                  {"project", id},
                  {"qty_micro", grant.micro},
                  {"price_centi", exchange_.last_price(id).centi},
                  {"reason", "founder"}});
    }
    flush(pending);
    return p;
}

IngestOutcome Market::ingest_revision(const Revision& rev) {
    contributions_.validate_revision(ledger_, rev);
    require_text("revision text", rev.after_text);
    require_text("revision id", rev.revision_id);

    const Money price = exchange_.last_price(rev.project_id);
    const IngestOutcome out = contributions_.ingest_revision(ledger_, rev, price);

    std::vector<EventRecord> pending;
    emit(pending, rev.ts, EventKind::RevisionIngested,
         json{{"revision_id", rev.revision_id},
              {"project", rev.project_id},
              {"participant", rev.participant_id},
              {"after_text", rev.after_text},
              {"bytes", out.bytes},
              {"price_centi", price.centi}});
    if (out.issued.micro > 0) {
        emit(pending, rev.ts, EventKind::SharesIssued,
             json{{"participant", rev.participant_id},
                  {"project", rev.project_id},
                  {"qty_micro", out.issued.micro},
                  {"price_centi", price.centi},
                  {"reason", "revision"},
                  {"revision_id", rev.revision_id}});
    }
    flush(pending);
    return out;
}

SubmitResult Market::submit_limit_order(const ParticipantId& participant, ProjectId project, Side side, Money limit,
                                        ShareQty qty, Timestamp ts) {
    exchange_.validate_submit(ledger_, participant, project, side, limit, qty);
    SubmitResult res = exchange_.submit_limit_order(ledger_, participant, project, side, limit, qty, ts);

    std::vector<EventRecord> pending;
    emit(pending, ts, EventKind::OrderSubmitted,
         json{{"order_id", res.order_id},
              {"participant", participant},
              {"project", project},
              {"side", to_string(side)},
              {"price_centi", limit.centi},
              {"qty_micro", qty.micro}});
    emit_steps(pending, ts, res.steps);
    flush(pending);
    return res;
}

Cancellation Market::cancel_order(const ParticipantId& participant, OrderId id, Timestamp ts) {
    exchange_.validate_cancel(participant, id);
    Cancellation c = exchange_.cancel_order(ledger_, participant, id);

    std::vector<EventRecord> pending;
    emit(pending, ts, EventKind::OrderCancelled, cancellation_payload(c));
    flush(pending);
    return c;
}

void Market::set_ex_post_value(ProjectId project, Money value_per_share, Timestamp ts) {
    if (!contributions_.has_project(project)) throw Error(ErrorCode::UnknownProject, "no project " + std::to_string(project));
    if (value_per_share.centi < 0) throw Error(ErrorCode::InvalidArgument, "negative ex-post value");
    ex_post_[project] = value_per_share;

    std::vector<EventRecord> pending;
    emit(pending, ts, EventKind::ExPostValueSet, json{{"project", project}, {"value_centi", value_per_share.centi}});
    flush(pending);
}

void Market::apply(const EventRecord& r) {
    const json& p = r.payload;
    switch (r.kind) {
        case EventKind::AccountOpened:
            open_account(field<std::string>(p, "participant"), Money{field<std::int64_t>(p, "endowment_centi")}, r.ts);
            return;
        case EventKind::ProjectCreated:
            create_project(field<std::string>(p, "creator"), field<std::string>(p, "title"),
                           field<std::string>(p, "text"), r.ts);
            return;
        case EventKind::RevisionIngested: {
            Revision rev;
            rev.revision_id = field<std::string>(p, "revision_id");
            rev.project_id = field<ProjectId>(p, "project");
            rev.participant_id = field<std::string>(p, "participant");
            rev.after_text = field<std::string>(p, "after_text");
            rev.ts = r.ts;
            ingest_revision(rev);
            return;
        }
        case EventKind::OrderSubmitted:
            submit_limit_order(field<std::string>(p, "participant"), field<ProjectId>(p, "project"),
                               parse_side(field<std::string>(p, "side")), Money{field<std::int64_t>(p, "price_centi")},
                               ShareQty{field<std::int64_t>(p, "qty_micro")}, r.ts);
            return;
        case EventKind::OrderCancelled:
            if (!r.is_command()) break;
            cancel_order(field<std::string>(p, "participant"), field<OrderId>(p, "order_id"), r.ts);
            return;
        case EventKind::ExPostValueSet:
            set_ex_post_value(field<ProjectId>(p, "project"), Money{field<std::int64_t>(p, "value_centi")}, r.ts);
            return;
        case EventKind::SharesIssued:
        case EventKind::TradeExecuted:
            break;
    }
    throw Error(ErrorCode::ReplayDivergence,
                "seq " + std::to_string(r.seq) + ": derived " + std::string(to_string(r.kind)) +
                    " event without a preceding command");
}

std::string Market::canonical_state() const {
    std::ostringstream os;
    os << "wikimarket-state/1\n";
    os << "config " << config_.endowment.centi << ' ' << config_.par_price.centi << ' '
       << config_.contribution.issuance.unit_value.centi << ' ' << config_.contribution.issuance.unit_bytes << ' '
       << config_.contribution.founder_grant.micro << '\n';
    os << "seq " << last_seq() << '\n';
    os << "next " << next_project_id_ << ' ' << exchange_.next_order_id() << ' ' << exchange_.next_trade_id() << '\n';

    os << "accounts " << ledger_.accounts().size() << '\n';
    for (const auto& [id, a] : ledger_.accounts()) {
        os << "account ";
        put(os, id);
        os << ' ' << a.endowment.centi << ' ' << a.cash.centi << ' ' << a.reserved_cash.centi << ' '
           << a.holdings.size() << '\n';
        for (const auto& [proj, h] : a.holdings) {
            os << "holding " << proj << ' ' << h.free.micro << ' ' << h.reserved.micro << '\n';
        }
    }

    os << "projects " << contributions_.projects().size() << '\n';
    for (const auto& [id, p] : contributions_.projects()) {
        os << "project " << id << ' ';
        put(os, p.creator);
        os << ' ' << p.created_ts.micros << ' ';
        put(os, p.title);
        os << ' ';
        put(os, p.body);
        os << ' ' << p.total_contributed_bytes << ' ' << p.last_revision_ts.micros << ' '
           << ledger_.shares_outstanding(id).micro << ' ' << exchange_.last_price(id).centi << ' ';
        auto ev = ex_post_.find(id);
        if (ev == ex_post_.end()) {
            os << '-';
        } else {
            os << ev->second.centi;
        }
        os << '\n';
    }
    for (const auto& [key, bytes] : contributions_.contributed()) {
        os << "contributed ";
        put(os, key.first);
        os << ' ' << key.second << ' ' << bytes << '\n';
    }
    for (const auto& [key, owed] : contributions_.owed()) {
        os << "owed ";
        put(os, key.first);
        os << ' ' << key.second << ' ' << numerator(owed) << '/' << denominator(owed) << '\n';
    }

    for (ProjectId proj : exchange_.projects()) {
        const auto orders = exchange_.resting_orders(proj);
        os << "book " << proj << ' ' << orders.size() << '\n';
        for (const Order* o : orders) {
            os << "order " << o->id << ' ';
            put(os, o->participant);
            os << ' ' << to_string(o->side) << ' ' << o->limit.centi << ' ' << o->original.micro << ' '
               << o->remaining.micro << ' ' << o->reserved_cash.centi << ' ' << o->ts.micros << '\n';
        }
    }

    std::vector<OrderId> filled(exchange_.filled_orders().begin(), exchange_.filled_orders().end());
    std::sort(filled.begin(), filled.end());
    os << "filled " << filled.size();
    for (OrderId id : filled) os << ' ' << id;
    os << '\n';
    return os.str();
}

std::string Market::snapshot_digest() const { return sha256_hex(canonical_state()); }

void Market::check_invariants() const {
    ledger_.check_invariants();
    exchange_.check_invariants(ledger_);
    for (const auto& [id, p] : contributions_.projects()) {
        if (ledger_.shares_outstanding(id) < contributions_.rules().founder_grant) {
            throw std::logic_error("project " + std::to_string(id) + " below founder grant");
        }
    }
}

}  // namespace wikimarket
