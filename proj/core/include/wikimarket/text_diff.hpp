#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace wikimarket {

/// One line of a text, including its trailing '\n' when present.
/// `key()` drops the terminator so that adding a newline to the last line
/// does not turn it into a different line.
struct TextLine {
    std::string_view full;

    std::string_view key() const {
        return !full.empty() && full.back() == '\n' ? full.substr(0, full.size() - 1) : full;
    }
};

std::vector<TextLine> split_lines(std::string_view text);

/// Indices (into `after`) of lines that are not part of the chosen longest
/// common subsequence, i.e. the inserted lines.
///
/// Common leading and trailing lines are matched first. In the remaining
/// middle, lines that occur on one side only are never matched; the rest go
/// through a leftmost-match LCS (equal heads are always matched, ties prefer
/// skipping the before-line), switching to a linear-space LCS for large
/// inputs. Any maximum common subsequence gives a valid count; the choice is
/// deterministic so replay reproduces it.
std::vector<std::size_t> inserted_lines(std::string_view before, std::string_view after);

/// Total bytes of inserted lines. Deletions and unchanged lines count 0.
std::int64_t count_contributed_bytes(std::string_view before, std::string_view after);

}  // namespace wikimarket
