#pragma once

// Fixed-point units used everywhere money or shares move.
//
//   Money    : integer centi-ER$ (1 ER$ = 100 centi)
//   ShareQty : integer micro-shares (1 share = 1'000'000 micro)
//
// Prices are Money per whole share. No floating point is used on any
// settlement path.

#include <compare>
#include <cstdint>
#include <ostream>
#include <string>

namespace wikimarket {

inline constexpr std::int64_t kCentiPerEr = 100;
inline constexpr std::int64_t kMicroPerShare = 1'000'000;

struct Money {
    std::int64_t centi = 0;

    constexpr Money() = default;
    constexpr explicit Money(std::int64_t c) : centi(c) {}

    static constexpr Money er(std::int64_t whole) { return Money{whole * kCentiPerEr}; }

    constexpr auto operator<=>(const Money&) const = default;

    constexpr Money operator+(Money o) const { return Money{centi + o.centi}; }
    constexpr Money operator-(Money o) const { return Money{centi - o.centi}; }
    constexpr Money operator-() const { return Money{-centi}; }
    constexpr Money& operator+=(Money o) { centi += o.centi; return *this; }
    constexpr Money& operator-=(Money o) { centi -= o.centi; return *this; }
};

struct ShareQty {
    std::int64_t micro = 0;

    constexpr ShareQty() = default;
    constexpr explicit ShareQty(std::int64_t m) : micro(m) {}

    static constexpr ShareQty shares(std::int64_t whole) { return ShareQty{whole * kMicroPerShare}; }

    constexpr auto operator<=>(const ShareQty&) const = default;

    constexpr ShareQty operator+(ShareQty o) const { return ShareQty{micro + o.micro}; }
    constexpr ShareQty operator-(ShareQty o) const { return ShareQty{micro - o.micro}; }
    constexpr ShareQty& operator+=(ShareQty o) { micro += o.micro; return *this; }
    constexpr ShareQty& operator-=(ShareQty o) { micro -= o.micro; return *this; }
};

/// price x qty rounded half-up to the centi. Throws std::overflow_error if
/// the result does not fit in 64 bits. Negative inputs are rejected.
Money notional_half_up(Money price, ShareQty qty);

/// price x qty rounded up to the centi; used for bid reservations.
Money notional_ceil(Money price, ShareQty qty);

/// "10500.00" style rendering, exact.
std::string format_er(Money m);

/// "1.500000" style rendering, exact.
std::string format_shares(ShareQty q);

inline std::ostream& operator<<(std::ostream& os, Money m) { return os << "ER$" << format_er(m); }
inline std::ostream& operator<<(std::ostream& os, ShareQty q) { return os << format_shares(q) << "sh"; }

}  // namespace wikimarket
