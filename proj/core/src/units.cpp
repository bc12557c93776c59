#include "wikimarket/units.hpp"

#include <cstdio>
#include <limits>
#include <stdexcept>

namespace wikimarket {

namespace {

using i128 = __int128;

Money checked(i128 v) {
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
        throw std::overflow_error("notional overflows 64-bit centi");
    }
    return Money{static_cast<std::int64_t>(v)};
}

void require_non_negative(Money price, ShareQty qty) {
    if (price.centi < 0 || qty.micro < 0) {
        throw std::invalid_argument("notional of negative price or quantity");
    }
}

std::string format_fixed(std::int64_t v, std::int64_t scale, int digits) {
    const bool neg = v < 0;
    // magnitude in unsigned space so INT64_MIN renders
    const auto mag = neg ? static_cast<std::uint64_t>(-(v + 1)) + 1 : static_cast<std::uint64_t>(v);
    const auto uscale = static_cast<std::uint64_t>(scale);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%llu.%0*llu", neg ? "-" : "", static_cast<unsigned long long>(mag / uscale),
                  digits, static_cast<unsigned long long>(mag % uscale));
    return buf;
}

}  // namespace

Money notional_half_up(Money price, ShareQty qty) {
    require_non_negative(price, qty);
    const i128 raw = static_cast<i128>(price.centi) * qty.micro;
    return checked((raw + kMicroPerShare / 2) / kMicroPerShare);
}

Money notional_ceil(Money price, ShareQty qty) {
    require_non_negative(price, qty);
    const i128 raw = static_cast<i128>(price.centi) * qty.micro;
    return checked((raw + kMicroPerShare - 1) / kMicroPerShare);
}

std::string format_er(Money m) { return format_fixed(m.centi, kCentiPerEr, 2); }

std::string format_shares(ShareQty q) { return format_fixed(q.micro, kMicroPerShare, 6); }

}  // namespace wikimarket
