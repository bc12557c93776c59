// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fails.
// Usage: acceptance [name...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles/fuzz_session.hpp"
#include "../oracles/homogeneity.hpp"
#include "../oracles/matching_session.hpp"
#include "wikimarket/contributions.hpp"
#include "wikimarket/replay.hpp"
#include "wikimarket/scoring.hpp"
#include "wikimarket/sim.hpp"

using namespace wikimarket;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Check = std::function<Outcome()>;

Timestamp at(std::int64_t s) { return Timestamp::from_seconds(1'347'868'800 + s); }

// 55 bytes through the engine at last prices ER$100, 200 and 50
Outcome issuance_exactness() {
    std::ostringstream d;
    bool ok = true;
    for (const std::int64_t price : {10'000, 20'000, 5'000}) {
        Market m;
        m.open_account("founder", std::nullopt, at(0));
        m.open_account("buyer", std::nullopt, at(0));
        m.open_account("writer", std::nullopt, at(0));
        m.create_project("founder", "P", "", at(1));
        if (price != m.last_price(1).centi) {
            m.submit_limit_order("founder", 1, Side::Ask, Money{price}, ShareQty::shares(1), at(2));
            m.submit_limit_order("buyer", 1, Side::Bid, Money{price}, ShareQty::shares(1), at(3));
        }
        const auto out = m.ingest_revision({"r", 1, "writer", at(4), std::nullopt, std::string(54, 'w') + "\n"});
        const std::int64_t want = 1'000'000LL * 10'000 / price;
        ok = ok && out.bytes == 55 && out.price.centi == price && out.issued.micro == want;
        d << "ER$" << format_er(Money{price}) << "->" << format_shares(out.issued) << " ";
    }
    return {ok, d.str()};
}

Outcome founder_grant() {
    Market m;
    m.open_account("founder", std::nullopt, at(0));
    m.create_project("founder", "P", "", at(1));
    const ShareQty grant = m.ledger().account("founder").holdings.at(1).free;
    const Money par = m.last_price(1);
    // ER$500 of founding value over 5 shares
    const bool implied = notional_half_up(par, grant) == Money::er(500);
    const bool ok = format_shares(grant) == "5.000000" && m.ledger().shares_outstanding(1) == grant &&
                    format_er(par) == "100.00" && implied;
    return {ok, "grant " + format_shares(grant) + " shares, founding price ER$" + format_er(par)};
}

Outcome conservation_fuzz() {
    const auto s = oracle::run_fuzz(20'240'917, 10'000, true);
    std::ostringstream d;
    d << s->stats.commands << " commands (" << s->stats.accepted << " accepted, " << s->stats.trades << " fills, "
      << s->stats.revisions << " revisions)";
    if (!s->failure.empty()) d << ": " << s->failure;
    return {s->failure.empty() && s->stats.commands == 10'000 && s->stats.trades > 0, d.str()};
}

Outcome matching_oracle() {
    oracle::MatchingStats stats;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const std::string diff = oracle::run_matching_session(seed, 1'000, &stats);
        if (!diff.empty()) return {false, "session " + std::to_string(seed) + ": " + diff};
    }
    std::ostringstream d;
    d << "100 sessions x 1000 orders, " << stats.fills << " fills, " << stats.self_trade_cancels
      << " self-trade cancels, " << stats.underfunded << " underfunded, " << stats.topups << " top-ups";
    return {stats.fills > 0, d.str()};
}

Outcome replay_determinism() {
    std::size_t sessions = 0, tampered = 0;
    std::mt19937_64 rng(99);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto s = oracle::run_fuzz(seed, seed == 1 ? 10'000 : 1'000, false);
        if (!s->failure.empty()) return {false, "session " + std::to_string(seed) + ": " + s->failure};
        const auto& j = s->journal.records();
        if (replay_journal(j).digest != s->market.snapshot_digest()) {
            return {false, "session " + std::to_string(seed) + ": replayed digest differs"};
        }
        ++sessions;

        // one trade price, then one random derived record
        std::vector<std::size_t> trades, derived;
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (j[i].kind == EventKind::TradeExecuted) trades.push_back(i);
            if (!j[i].is_command()) derived.push_back(i);
        }
        std::vector<std::pair<std::size_t, std::string>> edits;
        if (!trades.empty()) edits.emplace_back(trades[rng() % trades.size()], "price_centi");
        if (!derived.empty()) edits.emplace_back(derived[rng() % derived.size()], "");
        for (const auto& [idx, field] : edits) {
            auto copy = j;
            auto& p = copy[idx].payload;
            std::string key = field;
            if (key.empty()) {
                for (const auto& [k, v] : p.items()) {
                    if (v.is_number_integer()) {
                        key = k;
                        break;
                    }
                }
            }
            p[key] = p[key].get<std::int64_t>() + 1;
            try {
                replay_journal(copy);
                return {false, "session " + std::to_string(seed) + ": tampered " + std::string(to_string(copy[idx].kind)) +
                                   "." + key + " replayed cleanly"};
            } catch (const Error& e) {
                if (e.code() != ErrorCode::ReplayDivergence) return {false, e.what()};
            }
            ++tampered;
        }
    }
    return {tampered >= 20, std::to_string(sessions) + " sessions replay to live digest; " + std::to_string(tampered) +
                                " tampered journals all raised ReplayDivergence"};
}

Outcome inverse_monotonicity() {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::int64_t> bytes(1, 200'000), price(1, 100'000'000);
    for (int i = 0; i < 1000; ++i) {
        const std::int64_t b = bytes(rng);
        std::int64_t p1 = price(rng), p2 = price(rng);
        if (p1 > p2) std::swap(p1, p2);
        const Rational v = issuance_value(b);
        const Rational e1 = exact_issue_micro(v, Money{p1}), e2 = exact_issue_micro(v, Money{p2});
        // exact: issuance x price is the same value at every price
        if (e1 * p1 != e2 * p2 || e1 * p1 != v * kMicroPerShare) return {false, "exact proportionality broken"};
        Rational o1 = 0, o2 = 0;
        const ShareQty q1 = accrue_and_issue(o1, v, Money{p1}).issued;
        const ShareQty q2 = accrue_and_issue(o2, v, Money{p2}).issued;
        if (q1 < q2) return {false, "quantized issuance increased with price"};
    }
    return {true, "1000 (bytes, P1<=P2) pairs: exact inverse proportionality, quantized non-increasing"};
}

Outcome scaling_fit() {
    std::ostringstream d;
    bool ok = true;
    d << std::setprecision(3);
    for (double k : {0.5, 1.0, 1.3, 2.0}) {
        std::vector<scoring::FitPoint> pts;
        for (double x = 20; x < 5e6; x *= 1.9) pts.push_back({x, 1'000'000.0 * std::pow(x, k)});
        const double err = std::abs(scoring::fit_scaling_exponent(pts).slope - k);
        ok = ok && err <= 1e-9;
        d << k << ": |d|=" << err << "  ";
    }
    return {ok, d.str()};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

Outcome stylized_facts() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> slopes, ratios;
    int positive = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const sim::SimReport r = sim::run_semester(sim::SimConfig{}, seed);
        slopes.push_back(r.fit ? r.fit->slope : std::nan(""));
        ratios.push_back(r.max_over_mean_contribution());
        const auto rho = sim::creative_destruction_probe(r).rank_correlation;
        positive += rho && *rho > 0;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double ms = median(slopes), mr = median(ratios);
    std::ostringstream d;
    d << std::fixed << std::setprecision(3) << "median slope " << ms << " (>1), median max/mean " << mr
      << " (>10), rank corr > 0 in " << positive << "/20 (>=15), " << std::setprecision(1) << secs << " s (<300)";
    return {ms > 1.0 && mr > 10.0 && positive >= 15 && secs < 300, d.str()};
}

Outcome ranking_homogeneity() {
    using scoring::Mode;
    int runs = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Market base = oracle::scaled_semester(seed, {1, 1});
        for (const auto s : {oracle::Scale{1, 2}, oracle::Scale{3, 1}}) {
            const Market m = oracle::scaled_semester(seed, s);
            for (const Mode mode : {Mode::ExAnte, Mode::ExPost}) {
                if (oracle::permutation(m, mode) != oracle::permutation(base, mode)) {
                    return {false, "seed " + std::to_string(seed) + " scale " + std::to_string(s.num) + "/" +
                                       std::to_string(s.den) + " " + std::string(scoring::to_string(mode)) +
                                       " ranking changed"};
                }
                ++runs;
            }
        }
    }
    return {true, std::to_string(runs) + " rescaled leaderboards (lambda 0.5 and 3, ex ante and ex post) unchanged"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, Check>> checks{
        {"issuance_exactness", issuance_exactness},
        {"founder_grant", founder_grant},
        {"conservation_fuzz", conservation_fuzz},
        {"matching_oracle", matching_oracle},
        {"replay_determinism", replay_determinism},
        {"issuance_price_inverse_monotonicity", inverse_monotonicity},
        {"scaling_fit", scaling_fit},
        {"stylized_facts", stylized_facts},
        {"ranking_homogeneity", ranking_homogeneity},
    };
    std::vector<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& [name, check] : checks) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << std::fixed
                  << std::setprecision(2) << secs << "s]" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
