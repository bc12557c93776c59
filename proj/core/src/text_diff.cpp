#include "wikimarket/text_diff.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

namespace wikimarket {

namespace {

using Keys = std::vector<std::uint32_t>;

// above this the linear-space path is used
constexpr std::size_t kMaxTableCells = std::size_t{1} << 22;

// Leftmost-match LCS via a suffix table: equal heads are matched, ties
// between skipping a before-line and an after-line skip the before-line.
void table_lcs(const Keys& a, const Keys& b, std::vector<bool>& matched) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    const std::size_t w = m + 1;
    std::vector<std::uint32_t> table((n + 1) * w, 0);
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = m; j-- > 0;) {
            table[i * w + j] = a[i] == b[j] ? table[(i + 1) * w + j + 1] + 1
                                            : std::max(table[(i + 1) * w + j], table[i * w + j + 1]);
        }
    }
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < n && j < m) {
        if (a[i] == b[j]) {
            matched[j] = true;
            ++i;
            ++j;
        } else if (table[(i + 1) * w + j] >= table[i * w + j + 1]) {
            ++i;
        } else {
            ++j;
        }
    }
}

// LCS lengths of a[a_lo, a_hi) against every prefix (or, reversed, suffix)
// of b[b_lo, b_hi), in O(len b) space.
std::vector<std::uint32_t> lcs_row(const Keys& a, std::size_t a_lo, std::size_t a_hi, const Keys& b,
                                   std::size_t b_lo, std::size_t b_hi, bool reverse) {
    const std::size_t m = b_hi - b_lo;
    std::vector<std::uint32_t> prev(m + 1, 0), cur(m + 1, 0);
    for (std::size_t s = 0; s < a_hi - a_lo; ++s) {
        const std::uint32_t x = reverse ? a[a_hi - 1 - s] : a[a_lo + s];
        for (std::size_t t = 1; t <= m; ++t) {
            const std::uint32_t y = reverse ? b[b_hi - t] : b[b_lo + t - 1];
            cur[t] = x == y ? prev[t - 1] + 1 : std::max(prev[t], cur[t - 1]);
        }
        std::swap(prev, cur);
    }
    return prev;
}

void hirschberg(const Keys& a, std::size_t a_lo, std::size_t a_hi, const Keys& b, std::size_t b_lo,
                std::size_t b_hi, std::vector<bool>& matched) {
    if (a_lo >= a_hi || b_lo >= b_hi) return;
    if (a_hi - a_lo == 1) {
        for (std::size_t j = b_lo; j < b_hi; ++j) {
            if (b[j] == a[a_lo]) {
                matched[j] = true;
                return;
            }
        }
        return;
    }
    const std::size_t mid = a_lo + (a_hi - a_lo) / 2;
    const auto fwd = lcs_row(a, a_lo, mid, b, b_lo, b_hi, false);
    const auto bwd = lcs_row(a, mid, a_hi, b, b_lo, b_hi, true);
    const std::size_t m = b_hi - b_lo;
    std::size_t split = 0;
    std::uint32_t best = 0;
    for (std::size_t k = 0; k <= m; ++k) {
        const std::uint32_t v = fwd[k] + bwd[m - k];
        if (v > best || k == 0) {
            best = v;
            split = k;
        }
    }
    hirschberg(a, a_lo, mid, b, b_lo, b_lo + split, matched);
    hirschberg(a, mid, a_hi, b, b_lo + split, b_hi, matched);
}

}  // namespace

std::vector<TextLine> split_lines(std::string_view text) {
    std::vector<TextLine> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        const auto end = nl == std::string_view::npos ? text.size() : nl + 1;
        lines.push_back(TextLine{text.substr(start, end - start)});
        start = end;
    }
    return lines;
}

std::vector<std::size_t> inserted_lines(std::string_view before, std::string_view after) {
    const auto a = split_lines(before);
    const auto b = split_lines(after);

    std::size_t lo = 0;
    while (lo < a.size() && lo < b.size() && a[lo].key() == b[lo].key()) ++lo;
    std::size_t a_hi = a.size();
    std::size_t b_hi = b.size();
    while (a_hi > lo && b_hi > lo && a[a_hi - 1].key() == b[b_hi - 1].key()) {
        --a_hi;
        --b_hi;
    }

    std::vector<std::size_t> inserted;
    const std::size_t n = a_hi - lo;
    const std::size_t m = b_hi - lo;
    if (m == 0) return inserted;
    if (n == 0) {
        for (std::size_t j = lo; j < b_hi; ++j) inserted.push_back(j);
        return inserted;
    }

    // intern lines so the LCS compares integers; lines present on one side
    // only can never be matched and are dropped before the quadratic part
    std::unordered_map<std::string_view, std::uint32_t> ids;
    auto intern = [&](std::string_view k) {
        return ids.try_emplace(k, static_cast<std::uint32_t>(ids.size())).first->second;
    };
    std::vector<std::uint32_t> ka(n), kb(m);
    for (std::size_t i = 0; i < n; ++i) ka[i] = intern(a[lo + i].key());
    for (std::size_t j = 0; j < m; ++j) kb[j] = intern(b[lo + j].key());
    std::vector<std::uint8_t> side(ids.size(), 0);
    for (auto k : ka) side[k] |= 1;
    for (auto k : kb) side[k] |= 2;

    std::vector<std::uint32_t> fa, fb;
    std::vector<std::size_t> fb_index;
    for (auto k : ka)
        if (side[k] == 3) fa.push_back(k);
    for (std::size_t j = 0; j < m; ++j) {
        if (side[kb[j]] == 3) {
            fb.push_back(kb[j]);
            fb_index.push_back(j);
        }
    }

    std::vector<bool> matched(fb.size(), false);
    if (!fa.empty() && !fb.empty()) {
        if (fa.size() * fb.size() <= kMaxTableCells) {
            table_lcs(fa, fb, matched);
        } else {
            hirschberg(fa, 0, fa.size(), fb, 0, fb.size(), matched);
        }
    }

    std::vector<bool> kept(m, false);
    for (std::size_t f = 0; f < fb.size(); ++f)
        if (matched[f]) kept[fb_index[f]] = true;
    for (std::size_t j = 0; j < m; ++j)
        if (!kept[j]) inserted.push_back(lo + j);
    return inserted;
}

std::int64_t count_contributed_bytes(std::string_view before, std::string_view after) {
    if (before == after) return 0;
    const auto lines = split_lines(after);
    std::int64_t bytes = 0;
    for (auto idx : inserted_lines(before, after)) bytes += static_cast<std::int64_t>(lines[idx].full.size());
    return bytes;
}

}  // namespace wikimarket
