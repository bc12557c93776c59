#include "wikimarket/error.hpp"

namespace wikimarket {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DuplicateParticipant: return "DuplicateParticipant";
        case ErrorCode::UnknownParticipant: return "UnknownParticipant";
        case ErrorCode::DegenerateTrade: return "DegenerateTrade";
        case ErrorCode::InsufficientReservation: return "InsufficientReservation";
        case ErrorCode::UnknownProject: return "UnknownProject";
        case ErrorCode::DuplicateTitle: return "DuplicateTitle";
        case ErrorCode::NonPositivePrice: return "NonPositivePrice";
        case ErrorCode::StaleRevision: return "StaleRevision";
        case ErrorCode::InsufficientFunds: return "InsufficientFunds";
        case ErrorCode::InsufficientHoldings: return "InsufficientHoldings";
        case ErrorCode::ZeroQuantity: return "ZeroQuantity";
        case ErrorCode::UnknownOrder: return "UnknownOrder";
        case ErrorCode::NotOwner: return "NotOwner";
        case ErrorCode::AlreadyFilled: return "AlreadyFilled";
        case ErrorCode::MissingValuation: return "MissingValuation";
        case ErrorCode::InsufficientPoints: return "InsufficientPoints";
        case ErrorCode::NonPositiveValue: return "NonPositiveValue";
        case ErrorCode::SequenceGap: return "SequenceGap";
        case ErrorCode::StorageFailure: return "StorageFailure";
        case ErrorCode::CorruptJournal: return "CorruptJournal";
        case ErrorCode::ReplayDivergence: return "ReplayDivergence";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::PortInUse: return "PortInUse";
        case ErrorCode::JournalLocked: return "JournalLocked";
    }
    return "Unknown";
}

}  // namespace wikimarket
