#pragma once

// Read-side analytics over an engine state: portfolio valuation at market
// prices (ex-ante) or at instructor values (ex-post), leaderboards, the
// participant x project contribution matrix and the log-log scaling fit.
//
// Both scores are cash + reserved cash + sum over projects of
// round_half_up(holding x price), with price = last trade (ex-ante) or the
// instructor's value per share (ex-post).

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wikimarket/market.hpp"

namespace wikimarket::scoring {

using Valuation = std::map<ProjectId, Money>;

enum class Mode { ExAnte, ExPost };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);  // "ex_ante" | "ex_post"

Money ex_ante_value(const Market& market, const ParticipantId& participant);

/// Throws MissingValuation naming the first held project without a value.
Money ex_post_value(const Market& market, const ParticipantId& participant, const Valuation& valuation);

/// Engine valuations overlaid with `overrides`.
Valuation merged_valuation(const Market& market, const Valuation& overrides = {});

/// Throws MissingValuation naming the lowest project id without a value.
void require_complete(const Market& market, const Valuation& valuation);

struct ContributionMatrix {
    std::vector<ParticipantId> participants;  // by decreasing row total, ties by id
    std::vector<ProjectId> projects;          // by decreasing column total, ties by id
    std::vector<std::vector<std::int64_t>> bytes;

    std::int64_t row_total(std::size_t i) const;
    std::int64_t column_total(std::size_t j) const;
};

ContributionMatrix contribution_matrix(const Market& market);

struct FitPoint {
    double contribution = 0;
    double score = 0;
};

struct FitResult {
    double slope = 0;
    double intercept = 0;  // log10 units
    double r_squared = 0;
};

/// OLS of log10(score) on log10(contribution). Needs >= 3 points with two
/// distinct contributions (InsufficientPoints); all coordinates must be
/// strictly positive (NonPositiveValue). r^2 is 1 when the scores are
/// constant, since the fit is then exact.
FitResult fit_scaling_exponent(std::span<const FitPoint> points);

struct ScoreEntry {
    std::size_t rank = 0;
    ParticipantId participant;
    Money score;
    Money ex_ante;
    std::optional<Money> ex_post;
    std::int64_t contributed_bytes = 0;
};

/// Every participant, best score first, ties broken by participant id.
/// ExPost mode needs a value for every project (MissingValuation).
std::vector<ScoreEntry> leaderboard(const Market& market, Mode mode, const Valuation& valuation = {});

struct ScalingPoint {
    ParticipantId participant;
    std::int64_t bytes = 0;
    Money ex_ante;
    std::optional<Money> ex_post;
};

/// One row per participant, in id order; ex_post present when `valuation`
/// covers everything they hold.
std::vector<ScalingPoint> scaling_points(const Market& market, const Valuation& valuation = {});

/// Participants with bytes > 0, as (bytes, ex-ante score) pairs.
std::vector<FitPoint> ex_ante_fit_points(std::span<const ScalingPoint> points);

std::int64_t contributed_bytes(const Market& market, const ParticipantId& participant);

// CSV exports: UTF-8, header row, '\n' line endings, money as ER$ with two
// decimals, fields quoted only when they contain ',', '"' or a newline.
//
//   matrix      participant,<project id>...
//   leaderboard rank,participant,score,ex_ante,ex_post,contributed_bytes
//   points      participant,bytes,ex_ante,ex_post
void write_matrix_csv(std::ostream& os, const ContributionMatrix& m);
void write_leaderboard_csv(std::ostream& os, std::span<const ScoreEntry> entries);
void write_points_csv(std::ostream& os, std::span<const ScalingPoint> points);

std::string csv_field(std::string_view raw);

}  // namespace wikimarket::scoring
