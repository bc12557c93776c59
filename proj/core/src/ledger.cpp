#include "wikimarket/ledger.hpp"

#include <stdexcept>

#include "wikimarket/error.hpp"

namespace wikimarket {

ShareQty Account::holding_total(ProjectId project) const {
    auto it = holdings.find(project);
    return it == holdings.end() ? ShareQty{} : it->second.total();
}

const Account& Ledger::open_account(const ParticipantId& id, Money endowment) {
    if (endowment.centi < 0) {
        throw Error(ErrorCode::InvalidArgument, "negative endowment for " + id);
    }
    if (accounts_.contains(id)) {
        throw Error(ErrorCode::DuplicateParticipant, id);
    }
    Account acct;
    acct.id = id;
    acct.endowment = endowment;
    acct.cash = endowment;
    total_endowment_ += endowment;
    return accounts_.emplace(id, std::move(acct)).first->second;
}

void Ledger::register_project(ProjectId project) { outstanding_.try_emplace(project, ShareQty{}); }

const Account& Ledger::account(const ParticipantId& id) const {
    auto it = accounts_.find(id);
    if (it == accounts_.end()) {
        throw Error(ErrorCode::UnknownParticipant, "no participant " + id);
    }
    return it->second;
}

Account& Ledger::mutable_account(const ParticipantId& id) {
    auto it = accounts_.find(id);
    if (it == accounts_.end()) {
        throw Error(ErrorCode::UnknownParticipant, "no participant " + id);
    }
    return it->second;
}

void Ledger::reserve_cash(const ParticipantId& id, Money amount) {
    Account& a = mutable_account(id);
    if (amount.centi < 0 || a.cash < amount) {
        throw Error(ErrorCode::InsufficientFunds,
                    id + " has " + format_er(a.cash) + " free, needs " + format_er(amount));
    }
    a.cash -= amount;
    a.reserved_cash += amount;
}

void Ledger::release_cash(const ParticipantId& id, Money amount) {
    Account& a = mutable_account(id);
    if (amount.centi < 0 || a.reserved_cash < amount) {
        throw Error(ErrorCode::InsufficientReservation, "cash release exceeds reservation of " + id);
    }
    a.reserved_cash -= amount;
    a.cash += amount;
}

void Ledger::reserve_shares(const ParticipantId& id, ProjectId project, ShareQty qty) {
    Account& a = mutable_account(id);
    auto it = a.holdings.find(project);
    const ShareQty have = it == a.holdings.end() ? ShareQty{} : it->second.free;
    if (qty.micro < 0 || have < qty) {
        throw Error(ErrorCode::InsufficientHoldings,
                    id + " holds " + format_shares(have) + " free, needs " + format_shares(qty));
    }
    if (qty.micro == 0) return;
    it->second.free -= qty;
    it->second.reserved += qty;
}

void Ledger::release_shares(const ParticipantId& id, ProjectId project, ShareQty qty) {
    Account& a = mutable_account(id);
    auto it = a.holdings.find(project);
    if (qty.micro < 0 || it == a.holdings.end() || it->second.reserved < qty) {
        throw Error(ErrorCode::InsufficientReservation, "share release exceeds reservation of " + id);
    }
    it->second.reserved -= qty;
    it->second.free += qty;
}

void Ledger::settle_trade(const ParticipantId& buyer, const ParticipantId& seller, ProjectId project, ShareQty qty,
                          Money notional) {
    if (qty.micro <= 0 || notional.centi < 0 || buyer == seller) {
        throw Error(ErrorCode::DegenerateTrade, "qty " + format_shares(qty) + " between " + buyer + " and " + seller);
    }
    if (!has_project(project)) {
        throw Error(ErrorCode::UnknownProject, "no project " + std::to_string(project));
    }
    Account& b = mutable_account(buyer);
    Account& s = mutable_account(seller);
    auto sh = s.holdings.find(project);
    if (b.reserved_cash < notional || sh == s.holdings.end() || sh->second.reserved < qty) {
        throw Error(ErrorCode::InsufficientReservation,
                    "trade " + buyer + "<-" + seller + " on " + std::to_string(project) + " not covered");
    }
    // validated above; nothing below can throw except allocation in operator[]
    Holding& bh = b.holdings[project];
    b.reserved_cash -= notional;
    s.cash += notional;
    sh->second.reserved -= qty;
    bh.free += qty;
}

void Ledger::credit_shares(const ParticipantId& id, ProjectId project, ShareQty qty) {
    auto out = outstanding_.find(project);
    if (out == outstanding_.end()) {
        throw Error(ErrorCode::UnknownProject, "no project " + std::to_string(project));
    }
    if (qty.micro < 0) {
        throw Error(ErrorCode::InvalidArgument, "negative share credit");
    }
    Account& a = mutable_account(id);
    if (qty.micro == 0) return;
    a.holdings[project].free += qty;
    out->second += qty;
}

ShareQty Ledger::shares_outstanding(ProjectId project) const {
    auto it = outstanding_.find(project);
    if (it == outstanding_.end()) {
        throw Error(ErrorCode::UnknownProject, "no project " + std::to_string(project));
    }
    return it->second;
}

Money Ledger::total_cash() const {
    Money sum;
    for (const auto& [_, a] : accounts_) sum += a.cash + a.reserved_cash;
    return sum;
}

void Ledger::check_invariants() const {
    std::map<ProjectId, ShareQty> held;
    for (const auto& [id, a] : accounts_) {
        if (a.cash.centi < 0 || a.reserved_cash.centi < 0) {
            throw std::logic_error("negative cash bucket for " + id);
        }
        for (const auto& [p, h] : a.holdings) {
            if (h.free.micro < 0 || h.reserved.micro < 0) {
                throw std::logic_error("negative holding for " + id + " in " + std::to_string(p));
            }
            held[p] += h.total();
        }
    }
    if (total_cash() != total_endowment_) {
        throw std::logic_error("cash not conserved: " + format_er(total_cash()) + " vs endowments " +
                               format_er(total_endowment_));
    }
    for (const auto& [p, out] : outstanding_) {
        auto it = held.find(p);
        const ShareQty h = it == held.end() ? ShareQty{} : it->second;
        if (h != out) {
            throw std::logic_error("shares of " + std::to_string(p) + " not conserved");
        }
    }
}

}  // namespace wikimarket
