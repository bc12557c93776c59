#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wikimarket {

enum class ErrorCode {
    InvalidArgument,
    DuplicateParticipant,
    UnknownParticipant,
    DegenerateTrade,
    InsufficientReservation,
    UnknownProject,
    DuplicateTitle,
    NonPositivePrice,
    StaleRevision,
    InsufficientFunds,
    InsufficientHoldings,
    ZeroQuantity,
    UnknownOrder,
    NotOwner,
    AlreadyFilled,
    MissingValuation,
    InsufficientPoints,
    NonPositiveValue,
    SequenceGap,
    StorageFailure,
    CorruptJournal,
    ReplayDivergence,
    InvalidConfig,
    IoFailure,
    PortInUse,
    JournalLocked,
};

std::string_view to_string(ErrorCode code);

/// Every domain failure surfaces as this exception; `code()` is the
/// machine-readable name used on the wire and in CLI messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    /// what() without the leading "Code: "
    const char* detail() const noexcept { return what() + to_string(code_).size() + 2; }

private:
    ErrorCode code_;
};

}  // namespace wikimarket
