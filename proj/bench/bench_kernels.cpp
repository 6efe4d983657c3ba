// Serial reference kernels against the OpenMP / indexed paths.
//   bench_kernels [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "recur/ldp.hpp"
#include "recur/realization.hpp"
#include "recur/recurrence.hpp"

using namespace recur;

namespace {

template <class F>
double seconds(F&& f)
{
    const auto start = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void row(const char* name, double base, double fast)
{
    std::printf("%-34s %10.4f s %10.4f s %8.2fx\n", name, base, fast, base / fast);
}

}  // namespace

int main(int argc, char** argv)
{
    const Parallelism par{argc > 1 ? std::atoi(argv[1]) : 0};
    const auto bern = SourceModel::iid({0.7, 0.3});
    const auto flip = SourceModel::markov({{0.9, 0.1}, {0.1, 0.9}});
    std::printf("threads: %d\n", resolve_threads(par.threads));
    std::printf("%-34s %12s %12s %9s\n", "kernel", "reference", "fast", "speedup");

    {
        const auto real = generate_realization(bern, 1 << 20, 64, 1);
        std::uint64_t a = 0, b = 0;
        const double base = seconds([&] {
            for (std::size_t n = 16; n <= 28; ++n) a += recurrence_naive(real, n, 1 << 20).found();
        });
        const double fast = seconds([&] {
            for (std::size_t n = 16; n <= 28; ++n) b += recurrence_indexed(real, n, 1 << 20).found();
        });
        row("recurrence: naive vs indexed", base, fast);
        if (a != b) return 1;
    }
    {
        TailEstimate a, b;
        const double base = seconds([&] { a = reference::mc_tail_upper(flip, 12, 0.15, 20000, 3); });
        const double fast = seconds([&] { b = mc_tail_upper(flip, 12, 0.15, 20000, 3, Boundary::Strict, par); });
        row("upper tail n=12, 2e4 trials", base, fast);
        if (a.hits != b.hits) return 1;
    }
    {
        TailEstimate a, b;
        const double base = seconds([&] { a = reference::mc_tail_lower(bern, 14, 0.15, 20000, 4); });
        const double fast = seconds([&] { b = mc_tail_lower(bern, 14, 0.15, 20000, 4, Boundary::Strict, par); });
        row("lower tail n=14, 2e4 trials", base, fast);
        if (a.hits != b.hits) return 1;
    }
    {
        TailEstimate a, b;
        const double base =
            seconds([&] { a = reference::mc_tail_match(bern, 4096, 0.15, TailSide::MatchUpper, 5000, 5); });
        const double fast =
            seconds([&] { b = mc_tail_match(bern, 4096, 0.15, TailSide::MatchUpper, 5000, 5, par); });
        row("match tail m=4096, 5e3 trials", base, fast);
        if (a.hits != b.hits) return 1;
    }
    {
        const std::size_t n = 12, q = 144;
        const auto real = generate_realization(bern, 1 << 18, q + n, 6);
        std::vector<std::int64_t> starts(q);
        std::iota(starts.begin(), starts.end(), 1);
        std::vector<RecurrenceOutcome> a, b;
        const double base = seconds([&] {
            const auto data = real.to_array();
            for (std::size_t i = 0; i < q; ++i) {
                const Realization shifted(data, real.origin() + i, 2);
                a.push_back(recurrence_indexed(shifted, n, 1 << 17));
            }
        });
        const double fast = seconds([&] { b = recurrence_windows(real, n, starts, 1 << 17); });
        row("144 windows: per-window vs sweep", base, fast);
        if (a != b) return 1;
    }
    return 0;
}
