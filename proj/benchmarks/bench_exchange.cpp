#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "wikimarket/error.hpp"
#include "wikimarket/exchange.hpp"
#include "wikimarket/ledger.hpp"

using namespace wikimarket;

namespace {

struct Flow {
    std::string who;
    Side side;
    Money price;
    ShareQty qty;
};

std::vector<Flow> order_flow(std::size_t n, int people, std::int64_t spread) {
    std::mt19937_64 rng(7);
    std::vector<Flow> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({"p" + std::to_string(rng() % static_cast<unsigned>(people)), rng() % 2 ? Side::Bid : Side::Ask,
                       Money{10'000 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(2 * spread + 1)) - spread},
                       ShareQty{1 + static_cast<std::int64_t>(rng() % 3'000'000)}});
    }
    return out;
}

// Mixed flow near the touch; many orders cross.
void BM_SubmitCrossing(benchmark::State& state) {
    const auto flow = order_flow(static_cast<std::size_t>(state.range(0)), 20, 500);
    for (auto _ : state) {
        state.PauseTiming();
        Ledger ledger;
        Exchange ex(Money{10'000});
        ledger.register_project(1);
        ex.register_project(1);
        for (int i = 0; i < 20; ++i) {
            ledger.open_account("p" + std::to_string(i), Money::er(10'000'000));
            ledger.credit_shares("p" + std::to_string(i), 1, ShareQty::shares(100'000));
        }
        state.ResumeTiming();
        for (const auto& f : flow) {
            try {
                benchmark::DoNotOptimize(ex.submit_limit_order(ledger, f.who, 1, f.side, f.price, f.qty, Timestamp{}));
            } catch (const Error&) {
            }
        }
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SubmitCrossing)->Arg(1'000)->Arg(10'000)->Unit(benchmark::kMillisecond);

// Orders that rest: measures book insertion with a deep book.
void BM_SubmitResting(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        state.PauseTiming();
        Ledger ledger;
        Exchange ex(Money{10'000});
        ledger.register_project(1);
        ex.register_project(1);
        ledger.open_account("b", Money::er(100'000'000));
        ledger.open_account("s", Money{});
        ledger.credit_shares("s", 1, ShareQty::shares(1'000'000));
        state.ResumeTiming();
        for (std::size_t i = 0; i < n; ++i) {
            const auto off = static_cast<std::int64_t>(i % 1000);
            ex.submit_limit_order(ledger, "b", 1, Side::Bid, Money{5'000 - off}, ShareQty::shares(1), Timestamp{});
            ex.submit_limit_order(ledger, "s", 1, Side::Ask, Money{15'000 + off}, ShareQty::shares(1), Timestamp{});
        }
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 2);
}
BENCHMARK(BM_SubmitResting)->Arg(10'000)->Unit(benchmark::kMillisecond);

}  // namespace
