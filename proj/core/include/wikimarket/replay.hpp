#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "wikimarket/events.hpp"
#include "wikimarket/market.hpp"

namespace wikimarket {

struct ReplayOptions {
    /// Tolerate a final command whose derived records are missing (a crash
    /// between writes); the incomplete command is dropped from the result.
    bool allow_torn_tail = false;
};

struct ReplayResult {
    Market market;
    std::string digest;
    std::size_t records = 0;   // journal records consumed
    std::size_t commands = 0;  // command records re-executed
};

/// Re-executes every command in order on a fresh engine and checks that the
/// records it derives are identical to the journaled ones. Throws
/// CorruptJournal (malformed or non-dense journal) or ReplayDivergence.
ReplayResult replay_journal(std::span<const EventRecord> journal, const MarketConfig& config = {},
                            ReplayOptions options = {});

}  // namespace wikimarket
