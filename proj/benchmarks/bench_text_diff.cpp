#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "wikimarket/text_diff.hpp"

using namespace wikimarket;

namespace {

std::string page(std::mt19937_64& rng, std::size_t lines) {
    std::string s;
    for (std::size_t i = 0; i < lines; ++i) s += "line " + std::to_string(rng() % 5000) + " of the page\n";
    return s;
}

// scattered edits, so prefix/suffix trimming does not help much
std::string edit(std::mt19937_64& rng, const std::string& before) {
    std::string out;
    std::size_t start = 0;
    while (start < before.size()) {
        const std::size_t end = before.find('\n', start);
        const auto line = before.substr(start, end - start + 1);
        start = end + 1;
        const auto r = rng() % 20;
        if (r == 0) continue;
        out += r == 1 ? "new text " + std::to_string(rng()) + "\n" : line;
    }
    return out;
}

void BM_ContributedBytes(benchmark::State& state) {
    std::mt19937_64 rng(3);
    const std::string before = page(rng, static_cast<std::size_t>(state.range(0)));
    const std::string after = edit(rng, before);
    for (auto _ : state) benchmark::DoNotOptimize(count_contributed_bytes(before, after));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(before.size() + after.size()));
}
// the last size is past the table limit and takes the linear-space path
BENCHMARK(BM_ContributedBytes)->Arg(100)->Arg(1'000)->Arg(5'000)->Unit(benchmark::kMicrosecond);

void BM_AppendOnly(benchmark::State& state) {
    std::mt19937_64 rng(4);
    const std::string before = page(rng, static_cast<std::size_t>(state.range(0)));
    const std::string after = before + page(rng, 10);
    for (auto _ : state) benchmark::DoNotOptimize(count_contributed_bytes(before, after));
}
BENCHMARK(BM_AppendOnly)->Arg(1'000)->Arg(10'000)->Unit(benchmark::kMicrosecond);

}  // namespace
