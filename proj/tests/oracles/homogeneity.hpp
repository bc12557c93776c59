#pragma once

// One random semester played out at a chosen currency scale. Every money
// amount in the command stream (endowments, par, issuance value, limits,
// instructor values) is base * num / den; quantities are untouched. Base
// amounts are multiples of `den` and orders are in whole shares, so trade
// notionals stay exact at every scale.

#include <random>
#include <string>
#include <vector>

#include "wikimarket/error.hpp"
#include "wikimarket/market.hpp"
#include "wikimarket/scoring.hpp"

namespace oracle {

struct Scale {
    std::int64_t num = 1;
    std::int64_t den = 1;
    wikimarket::Money operator()(std::int64_t base) const { return wikimarket::Money{base * num / den}; }
};

inline wikimarket::Market scaled_semester(std::uint64_t seed, Scale s, std::size_t commands = 3'000,
                                          std::size_t* accepted = nullptr) {
    using namespace wikimarket;
    MarketConfig cfg;
    cfg.endowment = s(1'000'000);
    cfg.par_price = s(10'000);
    cfg.contribution.issuance.unit_value = s(10'000);
    Market m(cfg);

    std::mt19937_64 rng(seed);
    auto pick = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };
    const int people = 12;
    for (int i = 0; i < people; ++i) m.open_account("p" + std::to_string(i), std::nullopt, Timestamp{i});
    const int projects = 6;
    for (int p = 0; p < projects; ++p) m.create_project("p" + std::to_string(p), "project " + std::to_string(p), "", Timestamp{100 + p});

    std::size_t ok = 0;
    std::int64_t t = 1000;
    for (std::size_t i = 0; i < commands; ++i) {
        const std::string who = "p" + std::to_string(pick(0, people - 1));
        const ProjectId proj = static_cast<ProjectId>(pick(1, projects));
        try {
            const auto roll = pick(0, 9);
            if (roll < 3) {
                std::string body = m.contributions().project(proj).body;
                for (auto k = pick(1, 4); k > 0; --k) body += std::string(static_cast<std::size_t>(pick(5, 120)), 'a' + static_cast<char>(pick(0, 25))) + "\n";
                m.ingest_revision({"r" + std::to_string(i), proj, who, Timestamp{t++}, std::nullopt, body});
            } else if (roll < 9) {
                const std::int64_t base_price = 2 * pick(2'000, 10'000);  // ER$40..200
                const Side side = pick(0, 1) ? Side::Bid : Side::Ask;
                m.submit_limit_order(who, proj, side, s(base_price), ShareQty::shares(pick(1, 3)), Timestamp{t++});
            } else {
                const auto orders = m.exchange().orders_of(who);
                if (orders.empty()) continue;
                m.cancel_order(who, orders[static_cast<std::size_t>(pick(0, static_cast<std::int64_t>(orders.size()) - 1))]->id,
                               Timestamp{t++});
            }
            ++ok;
        } catch (const Error&) {
        }
    }
    for (int p = 1; p <= projects; ++p) {
        m.set_ex_post_value(static_cast<ProjectId>(p), s(2 * pick(0, 15'000)), Timestamp{t++});
    }
    if (accepted) *accepted = ok;
    return m;
}

inline std::vector<std::string> permutation(const wikimarket::Market& m, wikimarket::scoring::Mode mode) {
    std::vector<std::string> out;
    for (const auto& e : wikimarket::scoring::leaderboard(m, mode, m.ex_post_values())) out.push_back(e.participant);
    return out;
}

}  // namespace oracle
