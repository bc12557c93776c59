#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace wikimarket {

/// Microseconds since the Unix epoch, UTC.
struct Timestamp {
    std::int64_t micros = 0;

    constexpr auto operator<=>(const Timestamp&) const = default;

    static Timestamp now();
    static constexpr Timestamp from_seconds(std::int64_t s) { return Timestamp{s * 1'000'000}; }
};

/// "2012-09-17T08:00:00.000000Z"; always UTC with six fractional digits so
/// the rendering is canonical and round-trips exactly.
std::string to_rfc3339(Timestamp ts);

/// Accepts "YYYY-MM-DDTHH:MM:SS[.fraction](Z|±HH:MM)". Throws
/// Error(InvalidArgument) on malformed input.
Timestamp parse_rfc3339(std::string_view text);

}  // namespace wikimarket
