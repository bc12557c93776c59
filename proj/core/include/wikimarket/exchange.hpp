#pragma once

// Continuous double auction, one limit order book per project.
//
// Matching is price-time priority; a fill executes at the resting order's
// limit. Bids reserve ceil(limit x qty) up front and asks reserve the shares,
// so nothing can go negative. When an incoming order would meet one of its
// owner's resting orders, that resting order is cancelled first.

#include <cstdint>
#include <list>
#include <map>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "wikimarket/ledger.hpp"
#include "wikimarket/timestamp.hpp"
#include "wikimarket/units.hpp"

namespace wikimarket {

using OrderId = std::uint64_t;
using TradeId = std::uint64_t;

enum class Side { Bid, Ask };

std::string_view to_string(Side side);
Side parse_side(std::string_view text);  // "BID"/"ASK", case-insensitive

struct Order {
    OrderId id = 0;
    ParticipantId participant;
    ProjectId project = 0;
    Side side = Side::Bid;
    Money limit;
    ShareQty original;
    ShareQty remaining;
    Money reserved_cash;  // bids only: cash still locked behind this order
    Timestamp ts;
};

struct Fill {
    TradeId trade_id = 0;
    ProjectId project = 0;
    ParticipantId buyer;
    ParticipantId seller;
    OrderId buy_order = 0;
    OrderId sell_order = 0;
    Money price;
    ShareQty qty;
    Money notional;
    Money buyer_refund;  // reservation returned to the buyer's free cash
    Money buyer_topup;   // rounding shortfall drawn from the buyer's free cash
    Timestamp ts;
};

enum class CancelReason { User, SelfTrade, Underfunded };

std::string_view to_string(CancelReason reason);
CancelReason parse_cancel_reason(std::string_view text);

struct Cancellation {
    OrderId order = 0;
    ParticipantId participant;
    ProjectId project = 0;
    Side side = Side::Bid;
    ShareQty remaining;
    Money released_cash;
    ShareQty released_shares;
    CancelReason reason = CancelReason::User;
};

using ExecutionStep = std::variant<Cancellation, Fill>;

struct SubmitResult {
    OrderId order_id = 0;
    std::vector<ExecutionStep> steps;  // in execution order
    bool resting = false;

    std::vector<Fill> fills() const;
};

struct PriceLevel {
    Money price;
    ShareQty quantity;
    std::size_t orders = 0;

    bool operator==(const PriceLevel&) const = default;
};

struct BookSnapshot {
    std::vector<PriceLevel> bids;  // best first
    std::vector<PriceLevel> asks;  // best first
};

class Exchange {
public:
    explicit Exchange(Money par_price = Money::er(100)) : par_price_(par_price) {}

    // resting_ holds iterators into the books, so copies rebuild them
    Exchange(const Exchange& other);
    Exchange& operator=(const Exchange& other);
    Exchange(Exchange&&) noexcept = default;
    Exchange& operator=(Exchange&&) noexcept = default;

    void register_project(ProjectId project);
    bool has_project(ProjectId project) const { return books_.contains(project); }

    /// Throws without side effects if the order would be rejected.
    void validate_submit(const Ledger& ledger, const ParticipantId& participant, ProjectId project, Side side,
                         Money limit, ShareQty qty) const;

    SubmitResult submit_limit_order(Ledger& ledger, const ParticipantId& participant, ProjectId project, Side side,
                                    Money limit, ShareQty qty, Timestamp ts);

    void validate_cancel(const ParticipantId& participant, OrderId id) const;
    Cancellation cancel_order(Ledger& ledger, const ParticipantId& participant, OrderId id);

    Money last_price(ProjectId project) const;
    BookSnapshot book_snapshot(ProjectId project, std::size_t depth) const;

    const Order* find_order(OrderId id) const;
    bool is_filled(OrderId id) const { return filled_.contains(id); }

    /// Resting orders of one project in priority order, bids then asks.
    std::vector<const Order*> resting_orders(ProjectId project) const;
    std::vector<const Order*> orders_of(const ParticipantId& participant) const;

    std::optional<Money> best_bid(ProjectId project) const;
    std::optional<Money> best_ask(ProjectId project) const;

    OrderId next_order_id() const { return next_order_id_; }
    TradeId next_trade_id() const { return next_trade_id_; }
    const std::unordered_set<OrderId>& filled_orders() const { return filled_; }
    std::vector<ProjectId> projects() const;

    /// Uncrossed books and reservations that match the ledger exactly.
    void check_invariants(const Ledger& ledger) const;

private:
    struct Book {
        std::map<Money, std::list<OrderId>, std::greater<>> bids;
        std::map<Money, std::list<OrderId>> asks;
        Money last_price;
    };
    struct Resting {
        Order order;
        std::list<OrderId>::iterator pos;
    };

    const Book& book(ProjectId project) const;
    Book& book(ProjectId project);
    Order* best_opposite(Book& b, Side incoming);
    Cancellation remove_resting(Ledger& ledger, OrderId id, CancelReason reason);
    void rest(Book& b, Order order);

    Money par_price_;
    std::map<ProjectId, Book> books_;
    std::unordered_map<OrderId, Resting> resting_;
    std::unordered_set<OrderId> filled_;
    OrderId next_order_id_ = 1;
    TradeId next_trade_id_ = 1;
};

}  // namespace wikimarket
