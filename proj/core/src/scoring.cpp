#include "wikimarket/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "wikimarket/error.hpp"

namespace wikimarket::scoring {

std::string_view to_string(Mode mode) { return mode == Mode::ExAnte ? "ex_ante" : "ex_post"; }

Mode parse_mode(std::string_view text) {
    if (text == "ex_ante") return Mode::ExAnte;
    if (text == "ex_post") return Mode::ExPost;
    throw Error(ErrorCode::InvalidArgument, "mode must be ex_ante or ex_post, got '" + std::string(text) + "'");
}

Money ex_ante_value(const Market& market, const ParticipantId& participant) {
    const Account& a = market.ledger().account(participant);
    Money total = a.cash + a.reserved_cash;
    for (const auto& [proj, h] : a.holdings) total += notional_half_up(market.last_price(proj), h.total());
    return total;
}

Money ex_post_value(const Market& market, const ParticipantId& participant, const Valuation& valuation) {
    const Account& a = market.ledger().account(participant);
    Money total = a.cash + a.reserved_cash;
    for (const auto& [proj, h] : a.holdings) {
        if (h.total().micro == 0) continue;
        auto it = valuation.find(proj);
        if (it == valuation.end()) {
            throw Error(ErrorCode::MissingValuation, "project " + std::to_string(proj) + " has no ex-post value");
        }
        total += notional_half_up(it->second, h.total());
    }
    return total;
}

Valuation merged_valuation(const Market& market, const Valuation& overrides) {
    Valuation v = market.ex_post_values();
    for (const auto& [p, value] : overrides) v[p] = value;
    return v;
}

void require_complete(const Market& market, const Valuation& valuation) {
    for (const auto& [id, _] : market.contributions().projects()) {
        if (!valuation.contains(id)) {
            throw Error(ErrorCode::MissingValuation, "project " + std::to_string(id) + " has no ex-post value");
        }
    }
}

std::int64_t ContributionMatrix::row_total(std::size_t i) const {
    return std::accumulate(bytes[i].begin(), bytes[i].end(), std::int64_t{0});
}

std::int64_t ContributionMatrix::column_total(std::size_t j) const {
    std::int64_t sum = 0;
    for (const auto& row : bytes) sum += row[j];
    return sum;
}

ContributionMatrix contribution_matrix(const Market& market) {
    std::map<ParticipantId, std::int64_t> row_sum;
    std::map<ProjectId, std::int64_t> col_sum;
    for (const auto& [id, _] : market.ledger().accounts()) row_sum[id] = 0;
    for (const auto& [id, _] : market.contributions().projects()) col_sum[id] = 0;
    for (const auto& [key, b] : market.contributions().contributed()) {
        row_sum[key.first] += b;
        col_sum[key.second] += b;
    }

    ContributionMatrix m;
    std::vector<std::pair<ParticipantId, std::int64_t>> rows(row_sum.begin(), row_sum.end());
    std::vector<std::pair<ProjectId, std::int64_t>> cols(col_sum.begin(), col_sum.end());
    auto by_total = [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    };
    std::sort(rows.begin(), rows.end(), by_total);
    std::sort(cols.begin(), cols.end(), by_total);

    std::map<ParticipantId, std::size_t> row_index;
    std::map<ProjectId, std::size_t> col_index;
    for (const auto& [id, _] : rows) {
        row_index[id] = m.participants.size();
        m.participants.push_back(id);
    }
    for (const auto& [id, _] : cols) {
        col_index[id] = m.projects.size();
        m.projects.push_back(id);
    }
    m.bytes.assign(m.participants.size(), std::vector<std::int64_t>(m.projects.size(), 0));
    for (const auto& [key, b] : market.contributions().contributed()) {
        m.bytes[row_index.at(key.first)][col_index.at(key.second)] = b;
    }
    return m;
}

FitResult fit_scaling_exponent(std::span<const FitPoint> points) {
    if (points.size() < 3) {
        throw Error(ErrorCode::InsufficientPoints, "need at least 3 points, got " + std::to_string(points.size()));
    }
    std::vector<double> xs, ys;
    xs.reserve(points.size());
    ys.reserve(points.size());
    for (const auto& p : points) {
        if (!(p.contribution > 0) || !(p.score > 0) || !std::isfinite(p.contribution) || !std::isfinite(p.score)) {
            throw Error(ErrorCode::NonPositiveValue, "log-log fit needs strictly positive finite coordinates");
        }
        xs.push_back(std::log10(p.contribution));
        ys.push_back(std::log10(p.score));
    }
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0) throw Error(ErrorCode::InsufficientPoints, "all contributions are equal; slope is undefined");

    FitResult r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (r.intercept + r.slope * xs[i]);
        ss_res += e * e;
    }
    r.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    return r;
}

std::int64_t contributed_bytes(const Market& market, const ParticipantId& participant) {
    std::int64_t sum = 0;
    const auto& c = market.contributions().contributed();
    for (auto it = c.lower_bound({participant, 0}); it != c.end() && it->first.first == participant; ++it) {
        sum += it->second;
    }
    return sum;
}

std::vector<ScoreEntry> leaderboard(const Market& market, Mode mode, const Valuation& valuation) {
    if (mode == Mode::ExPost) require_complete(market, valuation);
    std::vector<ScoreEntry> out;
    for (const auto& [id, _] : market.ledger().accounts()) {
        ScoreEntry e;
        e.participant = id;
        e.ex_ante = ex_ante_value(market, id);
        if (mode == Mode::ExPost) e.ex_post = ex_post_value(market, id, valuation);
        e.score = mode == Mode::ExPost ? *e.ex_post : e.ex_ante;
        e.contributed_bytes = contributed_bytes(market, id);
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(), [](const ScoreEntry& a, const ScoreEntry& b) {
        return a.score != b.score ? a.score > b.score : a.participant < b.participant;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
    return out;
}

std::vector<ScalingPoint> scaling_points(const Market& market, const Valuation& valuation) {
    std::vector<ScalingPoint> out;
    for (const auto& [id, _] : market.ledger().accounts()) {
        ScalingPoint p;
        p.participant = id;
        p.bytes = contributed_bytes(market, id);
        p.ex_ante = ex_ante_value(market, id);
        try {
            p.ex_post = ex_post_value(market, id, valuation);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::MissingValuation) throw;
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<FitPoint> ex_ante_fit_points(std::span<const ScalingPoint> points) {
    std::vector<FitPoint> out;
    for (const auto& p : points) {
        if (p.bytes > 0 && p.ex_ante.centi > 0) {
            out.push_back({static_cast<double>(p.bytes), static_cast<double>(p.ex_ante.centi) / kCentiPerEr});
        }
    }
    return out;
}

std::string csv_field(std::string_view raw) {
    if (raw.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(raw);
    std::string out = "\"";
    for (char c : raw) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_matrix_csv(std::ostream& os, const ContributionMatrix& m) {
    os << "participant";
    for (ProjectId p : m.projects) os << ',' << p;
    os << '\n';
    for (std::size_t i = 0; i < m.participants.size(); ++i) {
        os << csv_field(m.participants[i]);
        for (std::int64_t b : m.bytes[i]) os << ',' << b;
        os << '\n';
    }
}

void write_leaderboard_csv(std::ostream& os, std::span<const ScoreEntry> entries) {
    os << "rank,participant,score,ex_ante,ex_post,contributed_bytes\n";
    for (const auto& e : entries) {
        os << e.rank << ',' << csv_field(e.participant) << ',' << format_er(e.score) << ',' << format_er(e.ex_ante)
           << ',' << (e.ex_post ? format_er(*e.ex_post) : std::string()) << ',' << e.contributed_bytes << '\n';
    }
}

void write_points_csv(std::ostream& os, std::span<const ScalingPoint> points) {
    os << "participant,bytes,ex_ante,ex_post\n";
    for (const auto& p : points) {
        os << csv_field(p.participant) << ',' << p.bytes << ',' << format_er(p.ex_ante) << ','
           << (p.ex_post ? format_er(*p.ex_post) : std::string()) << '\n';
    }
}

}  // namespace wikimarket::scoring
