#include "wikimarket/exchange.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "wikimarket/error.hpp"

namespace wikimarket {

std::string_view to_string(Side side) { return side == Side::Bid ? "BID" : "ASK"; }

Side parse_side(std::string_view text) {
    std::string up(text);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    if (up == "BID" || up == "BUY") return Side::Bid;
    if (up == "ASK" || up == "SELL") return Side::Ask;
    throw Error(ErrorCode::InvalidArgument, "unknown side '" + std::string(text) + "'");
}

std::string_view to_string(CancelReason reason) {
    switch (reason) {
        case CancelReason::User: return "user";
        case CancelReason::SelfTrade: return "self_trade";
        case CancelReason::Underfunded: return "underfunded";
    }
    return "user";
}

CancelReason parse_cancel_reason(std::string_view text) {
    if (text == "user") return CancelReason::User;
    if (text == "self_trade") return CancelReason::SelfTrade;
    if (text == "underfunded") return CancelReason::Underfunded;
    throw Error(ErrorCode::InvalidArgument, "unknown cancel reason '" + std::string(text) + "'");
}

std::vector<Fill> SubmitResult::fills() const {
    std::vector<Fill> out;
    for (const auto& s : steps) {
        if (const auto* f = std::get_if<Fill>(&s)) out.push_back(*f);
    }
    return out;
}

Exchange::Exchange(const Exchange& other)
    : par_price_(other.par_price_),
      books_(other.books_),
      filled_(other.filled_),
      next_order_id_(other.next_order_id_),
      next_trade_id_(other.next_trade_id_) {
    auto relink = [&](auto& levels) {
        for (auto& [_, ids] : levels) {
            for (auto it = ids.begin(); it != ids.end(); ++it) {
                resting_.emplace(*it, Resting{other.resting_.at(*it).order, it});
            }
        }
    };
    for (auto& [_, b] : books_) {
        relink(b.bids);
        relink(b.asks);
    }
}

Exchange& Exchange::operator=(const Exchange& other) {
    if (this != &other) {
        Exchange copy(other);
        *this = std::move(copy);
    }
    return *this;
}

void Exchange::register_project(ProjectId project) {
    books_.try_emplace(project).first->second.last_price = par_price_;
}

const Exchange::Book& Exchange::book(ProjectId project) const {
    auto it = books_.find(project);
    if (it == books_.end()) throw Error(ErrorCode::UnknownProject, "no project " + std::to_string(project));
    return it->second;
}

Exchange::Book& Exchange::book(ProjectId project) {
    auto it = books_.find(project);
    if (it == books_.end()) throw Error(ErrorCode::UnknownProject, "no project " + std::to_string(project));
    return it->second;
}

Money Exchange::last_price(ProjectId project) const { return book(project).last_price; }

std::optional<Money> Exchange::best_bid(ProjectId project) const {
    const Book& b = book(project);
    if (b.bids.empty()) return std::nullopt;
    return b.bids.begin()->first;
}

std::optional<Money> Exchange::best_ask(ProjectId project) const {
    const Book& b = book(project);
    if (b.asks.empty()) return std::nullopt;
    return b.asks.begin()->first;
}

void Exchange::validate_submit(const Ledger& ledger, const ParticipantId& participant, ProjectId project, Side side,
                               Money limit, ShareQty qty) const {
    if (qty.micro <= 0) throw Error(ErrorCode::ZeroQuantity, "order quantity must be positive");
    if (limit.centi <= 0) throw Error(ErrorCode::NonPositivePrice, format_er(limit));
    if (!books_.contains(project)) throw Error(ErrorCode::UnknownProject, "no project " + std::to_string(project));
    const Account& a = ledger.account(participant);
    if (side == Side::Bid) {
        const Money need = notional_ceil(limit, qty);
        if (a.cash < need) {
            throw Error(ErrorCode::InsufficientFunds,
                        participant + " has " + format_er(a.cash) + " free, bid needs " + format_er(need));
        }
    } else {
        auto it = a.holdings.find(project);
        const ShareQty have = it == a.holdings.end() ? ShareQty{} : it->second.free;
        if (have < qty) {
            throw Error(ErrorCode::InsufficientHoldings,
                        participant + " holds " + format_shares(have) + " free, ask needs " + format_shares(qty));
        }
    }
}

Order* Exchange::best_opposite(Book& b, Side incoming) {
    if (incoming == Side::Bid) {
        if (b.asks.empty()) return nullptr;
        return &resting_.at(b.asks.begin()->second.front()).order;
    }
    if (b.bids.empty()) return nullptr;
    return &resting_.at(b.bids.begin()->second.front()).order;
}

void Exchange::rest(Book& b, Order order) {
    const OrderId id = order.id;
    auto& level = order.side == Side::Bid ? b.bids[order.limit] : b.asks[order.limit];
    level.push_back(id);
    resting_.emplace(id, Resting{std::move(order), std::prev(level.end())});
}

Cancellation Exchange::remove_resting(Ledger& ledger, OrderId id, CancelReason reason) {
    auto it = resting_.find(id);
    Order& o = it->second.order;
    Book& b = book(o.project);

    Cancellation c;
    c.order = id;
    c.participant = o.participant;
    c.project = o.project;
    c.side = o.side;
    c.remaining = o.remaining;
    c.reason = reason;
    if (o.side == Side::Bid) {
        c.released_cash = o.reserved_cash;
        ledger.release_cash(o.participant, o.reserved_cash);
        auto lvl = b.bids.find(o.limit);
        lvl->second.erase(it->second.pos);
        if (lvl->second.empty()) b.bids.erase(lvl);
    } else {
        c.released_shares = o.remaining;
        ledger.release_shares(o.participant, o.project, o.remaining);
        auto lvl = b.asks.find(o.limit);
        lvl->second.erase(it->second.pos);
        if (lvl->second.empty()) b.asks.erase(lvl);
    }
    resting_.erase(it);
    return c;
}

SubmitResult Exchange::submit_limit_order(Ledger& ledger, const ParticipantId& participant, ProjectId project,
                                          Side side, Money limit, ShareQty qty, Timestamp ts) {
    validate_submit(ledger, participant, project, side, limit, qty);
    Book& b = book(project);

    Order in;
    in.id = next_order_id_++;
    in.participant = participant;
    in.project = project;
    in.side = side;
    in.limit = limit;
    in.original = qty;
    in.remaining = qty;
    in.ts = ts;
    if (side == Side::Bid) {
        in.reserved_cash = notional_ceil(limit, qty);
        ledger.reserve_cash(participant, in.reserved_cash);
    } else {
        ledger.reserve_shares(participant, project, qty);
    }

    SubmitResult result;
    result.order_id = in.id;
    bool incoming_underfunded = false;

    while (in.remaining.micro > 0) {
        Order* rest_o = best_opposite(b, side);
        if (rest_o == nullptr) break;
        const bool crosses = side == Side::Bid ? in.limit >= rest_o->limit : in.limit <= rest_o->limit;
        if (!crosses) break;

        if (rest_o->participant == participant) {
            result.steps.emplace_back(remove_resting(ledger, rest_o->id, CancelReason::SelfTrade));
            continue;
        }

        const ShareQty q = std::min(in.remaining, rest_o->remaining);
        const Money price = rest_o->limit;
        Order& bid = side == Side::Bid ? in : *rest_o;
        Order& ask = side == Side::Bid ? *rest_o : in;

        Fill f;
        f.trade_id = next_trade_id_++;
        f.project = project;
        f.buyer = bid.participant;
        f.seller = ask.participant;
        f.buy_order = bid.id;
        f.sell_order = ask.id;
        f.price = price;
        f.qty = q;
        f.notional = notional_half_up(price, q);
        f.ts = ts;

        // ceil(L*r) >= ceil(L*q) >= notional, so the fill itself is always covered
        ledger.settle_trade(bid.participant, ask.participant, project, q, f.notional);
        bid.reserved_cash -= f.notional;
        bid.remaining -= q;
        ask.remaining -= q;

        // per-fill rounding can leave the remainder short by at most one centi
        const Money required = notional_ceil(bid.limit, bid.remaining);
        bool underfunded = false;
        if (bid.reserved_cash < required) {
            const Money shortfall = required - bid.reserved_cash;
            if (ledger.account(bid.participant).cash >= shortfall) {
                ledger.reserve_cash(bid.participant, shortfall);
                bid.reserved_cash += shortfall;
                f.buyer_topup = shortfall;
            } else {
                underfunded = true;
            }
        } else if (bid.reserved_cash > required) {
            f.buyer_refund = bid.reserved_cash - required;
            ledger.release_cash(bid.participant, f.buyer_refund);
            bid.reserved_cash = required;
        }
        b.last_price = price;
        result.steps.emplace_back(std::move(f));

        const OrderId rest_id = rest_o->id;
        if (rest_o->remaining.micro == 0) {
            // fully consumed: nothing left reserved behind it
            filled_.insert(rest_id);
            Order& o = resting_.at(rest_id).order;
            if (o.side == Side::Bid && o.reserved_cash.centi > 0) {
                throw std::logic_error("filled bid kept a reservation");
            }
            if (o.side == Side::Bid) {
                auto lvl = b.bids.find(o.limit);
                lvl->second.erase(resting_.at(rest_id).pos);
                if (lvl->second.empty()) b.bids.erase(lvl);
            } else {
                auto lvl = b.asks.find(o.limit);
                lvl->second.erase(resting_.at(rest_id).pos);
                if (lvl->second.empty()) b.asks.erase(lvl);
            }
            resting_.erase(rest_id);
        } else if (underfunded && side == Side::Ask) {
            result.steps.emplace_back(remove_resting(ledger, rest_id, CancelReason::Underfunded));
        }
        if (underfunded && side == Side::Bid) {
            incoming_underfunded = true;
            break;
        }
    }

    if (in.remaining.micro == 0) {
        filled_.insert(in.id);
    } else if (incoming_underfunded) {
        Cancellation c;
        c.order = in.id;
        c.participant = participant;
        c.project = project;
        c.side = side;
        c.remaining = in.remaining;
        c.released_cash = in.reserved_cash;
        c.reason = CancelReason::Underfunded;
        ledger.release_cash(participant, in.reserved_cash);
        result.steps.emplace_back(std::move(c));
    } else {
        rest(b, std::move(in));
        result.resting = true;
    }
    return result;
}

void Exchange::validate_cancel(const ParticipantId& participant, OrderId id) const {
    auto it = resting_.find(id);
    if (it == resting_.end()) {
        if (filled_.contains(id)) throw Error(ErrorCode::AlreadyFilled, "order " + std::to_string(id));
        throw Error(ErrorCode::UnknownOrder, "order " + std::to_string(id));
    }
    if (it->second.order.participant != participant) {
        throw Error(ErrorCode::NotOwner, "order " + std::to_string(id) + " belongs to another participant");
    }
}

Cancellation Exchange::cancel_order(Ledger& ledger, const ParticipantId& participant, OrderId id) {
    validate_cancel(participant, id);
    return remove_resting(ledger, id, CancelReason::User);
}

BookSnapshot Exchange::book_snapshot(ProjectId project, std::size_t depth) const {
    if (depth < 1) throw Error(ErrorCode::InvalidArgument, "depth must be at least 1");
    const Book& b = book(project);
    BookSnapshot snap;
    auto collect = [&](const auto& side, std::vector<PriceLevel>& out) {
        for (const auto& [price, ids] : side) {
            if (out.size() >= depth) break;
            PriceLevel lvl{price, ShareQty{}, ids.size()};
            for (OrderId id : ids) lvl.quantity += resting_.at(id).order.remaining;
            out.push_back(lvl);
        }
    };
    collect(b.bids, snap.bids);
    collect(b.asks, snap.asks);
    return snap;
}

const Order* Exchange::find_order(OrderId id) const {
    auto it = resting_.find(id);
    return it == resting_.end() ? nullptr : &it->second.order;
}

std::vector<const Order*> Exchange::resting_orders(ProjectId project) const {
    const Book& b = book(project);
    std::vector<const Order*> out;
    for (const auto& [_, ids] : b.bids)
        for (OrderId id : ids) out.push_back(&resting_.at(id).order);
    for (const auto& [_, ids] : b.asks)
        for (OrderId id : ids) out.push_back(&resting_.at(id).order);
    return out;
}

std::vector<const Order*> Exchange::orders_of(const ParticipantId& participant) const {
    std::vector<const Order*> out;
    for (const auto& [id, r] : resting_) {
        if (r.order.participant == participant) out.push_back(&r.order);
    }
    std::sort(out.begin(), out.end(), [](const Order* a, const Order* b) { return a->id < b->id; });
    return out;
}

std::vector<ProjectId> Exchange::projects() const {
    std::vector<ProjectId> out;
    out.reserve(books_.size());
    for (const auto& [p, _] : books_) out.push_back(p);
    return out;
}

void Exchange::check_invariants(const Ledger& ledger) const {
    std::map<ParticipantId, Money> bid_cash;
    std::map<std::pair<ParticipantId, ProjectId>, ShareQty> ask_qty;
    for (const auto& [p, b] : books_) {
        if (!b.bids.empty() && !b.asks.empty() && b.bids.begin()->first >= b.asks.begin()->first) {
            throw std::logic_error("crossed book on project " + std::to_string(p));
        }
        if (b.last_price.centi <= 0) throw std::logic_error("non-positive last price");
    }
    for (const auto& [id, r] : resting_) {
        const Order& o = r.order;
        if (o.remaining.micro <= 0 || o.remaining > o.original) throw std::logic_error("bad resting quantity");
        if (o.side == Side::Bid) {
            if (o.reserved_cash != notional_ceil(o.limit, o.remaining)) {
                throw std::logic_error("bid " + std::to_string(id) + " reservation drifted");
            }
            bid_cash[o.participant] += o.reserved_cash;
        } else {
            ask_qty[{o.participant, o.project}] += o.remaining;
        }
    }
    for (const auto& [pid, a] : ledger.accounts()) {
        auto bc = bid_cash.find(pid);
        if ((bc == bid_cash.end() ? Money{} : bc->second) != a.reserved_cash) {
            throw std::logic_error("reserved cash of " + pid + " does not match resting bids");
        }
        for (const auto& [proj, h] : a.holdings) {
            auto aq = ask_qty.find({pid, proj});
            if ((aq == ask_qty.end() ? ShareQty{} : aq->second) != h.reserved) {
                throw std::logic_error("reserved shares of " + pid + " do not match resting asks");
            }
        }
    }
}

}  // namespace wikimarket
