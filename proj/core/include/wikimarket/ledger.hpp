#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "wikimarket/units.hpp"

namespace wikimarket {

using ParticipantId = std::string;
using ProjectId = std::uint64_t;

struct Holding {
    ShareQty free;
    ShareQty reserved;  // locked behind resting asks

    ShareQty total() const { return free + reserved; }
};

struct Account {
    ParticipantId id;
    Money endowment;
    Money cash;           // free
    Money reserved_cash;  // locked behind resting bids
    std::map<ProjectId, Holding> holdings;

    ShareQty holding_total(ProjectId project) const;
};

/// Accounts, balances, holdings and reservations.
///
/// Cash only enters through open_account; shares only enter through
/// credit_shares. Every other operation moves value between buckets or
/// between accounts without creating or destroying any.
class Ledger {
public:
    const Account& open_account(const ParticipantId& id, Money endowment);
    void register_project(ProjectId project);

    bool has_account(const ParticipantId& id) const { return accounts_.contains(id); }
    bool has_project(ProjectId project) const { return outstanding_.contains(project); }

    const Account& account(const ParticipantId& id) const;
    const std::map<ParticipantId, Account>& accounts() const { return accounts_; }
    const std::map<ProjectId, ShareQty>& outstanding() const { return outstanding_; }

    // Reservation moves. Each throws InsufficientFunds/InsufficientHoldings
    // (reserve) or InsufficientReservation (release) when the source bucket
    // is short, leaving state untouched.
    void reserve_cash(const ParticipantId& id, Money amount);
    void release_cash(const ParticipantId& id, Money amount);
    void reserve_shares(const ParticipantId& id, ProjectId project, ShareQty qty);
    void release_shares(const ParticipantId& id, ProjectId project, ShareQty qty);

    /// Buyer's reserved cash pays the seller; seller's reserved shares move
    /// to the buyer's free holdings. All or nothing.
    void settle_trade(const ParticipantId& buyer, const ParticipantId& seller, ProjectId project, ShareQty qty,
                      Money notional);

    /// Newly issued shares; the only way shares_outstanding grows.
    void credit_shares(const ParticipantId& id, ProjectId project, ShareQty qty);

    ShareQty shares_outstanding(ProjectId project) const;

    Money total_endowment() const { return total_endowment_; }
    Money total_cash() const;  // sum of cash + reserved_cash

    /// Throws std::logic_error naming the first broken conservation or
    /// sign invariant. Linear in state size; meant for tests and replay.
    void check_invariants() const;

private:
    Account& mutable_account(const ParticipantId& id);

    std::map<ParticipantId, Account> accounts_;
    std::map<ProjectId, ShareQty> outstanding_;
    Money total_endowment_;
};

}  // namespace wikimarket
