#include "wikimarket/timestamp.hpp"

#include <chrono>
#include <cstdio>

#include "wikimarket/error.hpp"

namespace wikimarket {

namespace {

using namespace std::chrono;

constexpr std::int64_t kMicrosPerDay = 86'400'000'000;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    const std::int64_t q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

[[noreturn]] void malformed(std::string_view text) {
    throw Error(ErrorCode::InvalidArgument, "malformed RFC-3339 timestamp '" + std::string(text) + "'");
}

int digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) malformed(s);
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') malformed(s);
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

void expect(std::string_view s, std::size_t pos, char c) {
    if (pos >= s.size() || s[pos] != c) malformed(s);
}

}  // namespace

Timestamp Timestamp::now() {
    return Timestamp{duration_cast<microseconds>(system_clock::now().time_since_epoch()).count()};
}

std::string to_rfc3339(Timestamp ts) {
    const std::int64_t day = floor_div(ts.micros, kMicrosPerDay);
    const std::int64_t in_day = ts.micros - day * kMicrosPerDay;
    const year_month_day ymd{sys_days{days{day}}};
    const std::int64_t secs = in_day / 1'000'000;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%06lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(secs / 3600), static_cast<long long>((secs / 60) % 60),
                  static_cast<long long>(secs % 60), static_cast<long long>(in_day % 1'000'000));
    return buf;
}

Timestamp parse_rfc3339(std::string_view s) {
    const int y = digits(s, 0, 4);
    expect(s, 4, '-');
    const int mo = digits(s, 5, 2);
    expect(s, 7, '-');
    const int d = digits(s, 8, 2);
    if (s.size() < 11 || (s[10] != 'T' && s[10] != 't' && s[10] != ' ')) malformed(s);
    const int hh = digits(s, 11, 2);
    expect(s, 13, ':');
    const int mm = digits(s, 14, 2);
    expect(s, 16, ':');
    const int ss = digits(s, 17, 2);
    std::size_t pos = 19;
    std::int64_t frac = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::int64_t scale = 100'000;
        const std::size_t start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            frac += (s[pos] - '0') * scale;  // digits beyond micro are truncated
            scale /= 10;
            ++pos;
        }
        if (pos == start) malformed(s);
    }
    std::int64_t offset_minutes = 0;
    if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
        ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        const int sign = s[pos] == '-' ? -1 : 1;
        const int oh = digits(s, pos + 1, 2);
        expect(s, pos + 3, ':');
        const int om = digits(s, pos + 4, 2);
        offset_minutes = sign * (oh * 60 + om);
        pos += 6;
    } else {
        malformed(s);
    }
    if (pos != s.size()) malformed(s);

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) malformed(s);
    const std::int64_t day_count = sys_days{ymd}.time_since_epoch().count();
    const std::int64_t secs = day_count * 86'400 + hh * 3600 + mm * 60 + ss - offset_minutes * 60;
    return Timestamp{secs * 1'000'000 + frac};
}

}  // namespace wikimarket
