#include <benchmark/benchmark.h>

#include "wikimarket/journal.hpp"
#include "wikimarket/replay.hpp"
#include "wikimarket/sim.hpp"

using namespace wikimarket;

namespace {

sim::SimConfig small_config() {
    sim::SimConfig c;
    c.n_agents = 20;
    c.n_days = 30;
    return c;
}

void BM_SimulateSemester(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(sim::run_semester(small_config(), 11));
}
BENCHMARK(BM_SimulateSemester)->Unit(benchmark::kMillisecond);

void BM_ReplayJournal(benchmark::State& state) {
    sim::SimConfig c = small_config();
    c.seed = 11;
    const sim::SimRun r = sim::run_semester_full(c);
    for (auto _ : state) benchmark::DoNotOptimize(replay_journal(r.journal));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.journal.size()));
}
BENCHMARK(BM_ReplayJournal)->Unit(benchmark::kMillisecond);

}  // namespace
