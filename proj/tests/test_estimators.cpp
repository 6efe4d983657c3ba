#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "recur/error.hpp"
#include "recur/estimators.hpp"
#include "recur/recurrence.hpp"

using namespace recur;

namespace {

template <class F>
ErrorKind kind_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::Io;
}

// Q(n) = 1 for every n.
const QSchedule kOneWindow{1e-9, 1.0};

}  // namespace

TEST_CASE("schedule")
{
    CHECK(QSchedule{}.windows(20) == 400);
    CHECK(QSchedule{0.5, 1.5}.windows(4) == 4);
    CHECK(kOneWindow.windows(50) == 1);
    CHECK(kind_of([] { QSchedule{0.0, 2.0}.validate(); }) == ErrorKind::Validation);
    CHECK(kind_of([] { QSchedule{1.0, -1.0}.validate(); }) == ErrorKind::Validation);
}

TEST_CASE("default window")
{
    CHECK(default_w_max(8, 0.0) == 256 + 8);
    CHECK(default_w_max(4, 1.0) == 256 + 4);
    CHECK(default_w_max(20, 0.88129) == kWindowCap);
}

TEST_CASE("constant source gives J_n = 0")
{
    const auto m = SourceModel::constant(0);
    for (std::size_t n : {1u, 5u, 16u}) {
        const QSchedule s{};
        const auto real = generate_realization(m, 300, s.windows(n) + n, 1);
        const auto rep = estimate_Jn(real, n, s, 300);
        CHECK(rep.estimate_bits == 0.0);
        CHECK(rep.flag == EstimateFlag::Exact);
        CHECK(rep.censored_count == 0);
        CHECK(rep.q == s.windows(n));
    }
}

TEST_CASE("period-2 source gives J_4 = 1/4")
{
    const auto m = SourceModel::periodic({0, 1});
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        for (double c : {1e-9, 1.0, 3.0}) {
            const QSchedule s{c, 1.0};
            const auto real = generate_realization(m, 64, s.windows(4) + 4, seed);
            CHECK(estimate_Jn(real, 4, s, 64).estimate_bits == 0.25);
        }
    }
}

TEST_CASE("one window reproduces the shifted recurrence")
{
    const auto model = SourceModel::iid({0.7, 0.3});
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t n = 6;
        const auto real = generate_realization(model, 4000, n + 1, seed);
        const auto rep = estimate_Jn(real, n, kOneWindow, 3999);
        // T x moves x_1 into the past: origin one step later.
        const auto data = real.to_array();
        const Realization shifted(data, real.origin() + 1, 2);
        const auto r = recurrence_naive(shifted, n, 3999);
        if (r.found()) {
            CHECK(rep.estimate_bits == doctest::Approx(std::log2(double(r.r())) / n).epsilon(1e-15));
            CHECK(rep.flag == EstimateFlag::Exact);
        } else {
            CHECK(rep.flag == EstimateFlag::LowerBound);
        }
    }
}

TEST_CASE("censoring imputes at w_max and flags a lower bound")
{
    const auto model = SourceModel::iid({0.5, 0.5});
    const std::size_t n = 12;
    const QSchedule s{};
    const auto real = generate_realization(model, 1 << 14, s.windows(n) + n, 3);
    double prev = 0.0;
    for (std::uint64_t w : {16u, 64u, 256u, 1024u, 4096u, 16384u}) {
        const auto rep = estimate_Jn(real, n, s, w);
        CHECK((rep.censored_count == 0) == (rep.flag == EstimateFlag::Exact));
        CHECK(rep.estimate_bits >= 0.0);
        if (rep.flag == EstimateFlag::LowerBound) CHECK(rep.estimate_bits >= prev);
        prev = rep.estimate_bits;
    }
    const auto tiny = estimate_Jn(real, n, s, 16);
    CHECK(tiny.censored_count > 0);
    CHECK(tiny.estimate_bits <= 4.0 / n + 1e-12);
}

TEST_CASE("length preconditions")
{
    const auto model = SourceModel::iid({0.5, 0.5});
    const auto real = generate_realization(model, 100, 20, 1);
    CHECK(kind_of([&] { estimate_Jn(real, 4, QSchedule{}, 200); }) == ErrorKind::InsufficientData);
    CHECK(kind_of([&] { estimate_Jn(real, 5, QSchedule{}, 50); }) == ErrorKind::InsufficientData);
    CHECK(estimate_Jn(real, 4, QSchedule{}, 50).q == 16);
    CHECK(kind_of([&] { estimate_match_dual(real, 500, 4); }) == ErrorKind::InsufficientData);
    CHECK(kind_of([&] { estimate_match_dual(real, 16, 20); }) == ErrorKind::InsufficientData);
}

TEST_CASE("streaming and materialized estimates agree")
{
    const auto model = SourceModel::markov({{0.9, 0.1}, {0.1, 0.9}});
    const QSchedule s{};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t n = 8;
        StreamingPath path(model, s.windows(n) + n, seed);
        const auto lazy = estimate_Jn(path, n, s, 20000);
        const auto real = generate_realization(model, 20000, s.windows(n) + n, seed);
        const auto full = estimate_Jn(real, n, s, 20000);
        CHECK(lazy.estimate_bits == full.estimate_bits);
        CHECK(lazy.censored_count == full.censored_count);
    }
}

TEST_CASE("match dual on zero-entropy sources")
{
    SUBCASE("constant: every window is future-limited")
    {
        const auto real = generate_realization(SourceModel::constant(0), 16, 65, 0);
        const auto rep = estimate_match_dual(real, 16, 1);
        CHECK(rep.flag == EstimateFlag::Biased);
        CHECK(rep.censored_count == 1);
        CHECK(rep.estimate_bits == 4.0 / 64);
    }
    SUBCASE("period 2, m = 4, 64 future symbols")
    {
        const auto real = generate_realization(SourceModel::periodic({0, 1}), 8, 65, 2);
        const auto rep = estimate_match_dual(real, 4, 1);
        CHECK(rep.estimate_bits == 0.03125);
        CHECK(rep.flag == EstimateFlag::Biased);
    }
}

TEST_CASE("match dual on uniform bits")
{
    const auto model = SourceModel::iid({0.5, 0.5});
    const std::size_t m = 4096, q = 64;
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto real = generate_realization(model, m, q + 256, seed);
        const auto rep = estimate_match_dual(real, m, q);
        CHECK(rep.flag == EstimateFlag::Exact);
        sum += rep.estimate_bits;
    }
    CHECK(std::abs(sum / 100 - 1.0) <= 0.15);
}

TEST_CASE("convergence sweep")
{
    SUBCASE("constant source: all zeros")
    {
        const auto out = convergence_sweep(SourceModel::constant(0), {4, 8}, QSchedule{}, {1, 2, 3});
        REQUIRE(out.rows.size() == 6);
        for (const auto& r : out.rows) CHECK(r.report.estimate_bits == 0.0);
        for (const auto& s : out.summary) CHECK(s.mean == 0.0);
    }
    SUBCASE("flip chain at n = 16")
    {
        std::vector<std::uint64_t> seeds(20);
        for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = 100 + i;
        const auto out =
            convergence_sweep(SourceModel::markov({{0.9, 0.1}, {0.1, 0.9}}), {8, 12, 16}, QSchedule{}, seeds);
        REQUIRE(out.summary.size() == 3);
        CHECK(out.entropy_bits == doctest::Approx(0.46900).epsilon(1e-5));
        CHECK(std::abs(out.summary[2].mean - 0.46900) <= 0.12);
        // Alternating blocks have probability near 1e-16 and stay censored.
        for (const auto& r : out.rows)
            CHECK((r.report.censored_count > 0) == (r.report.flag == EstimateFlag::LowerBound));
    }
    SUBCASE("rows do not depend on the thread count")
    {
        const auto model = SourceModel::iid({0.7, 0.3});
        const std::vector<std::uint64_t> seeds{5, 6, 7, 8};
        const auto a = convergence_sweep(model, {6, 9}, QSchedule{}, seeds, std::nullopt, Parallelism{1});
        const auto b = convergence_sweep(model, {6, 9}, QSchedule{}, seeds, std::nullopt, Parallelism{3});
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            CHECK(a.rows[i].seed == b.rows[i].seed);
            CHECK(a.rows[i].report.estimate_bits == b.rows[i].report.estimate_bits);
        }
    }
    SUBCASE("bad arguments")
    {
        CHECK(kind_of([] { convergence_sweep(SourceModel::constant(0), {}, QSchedule{}, {1}); }) ==
              ErrorKind::Validation);
        CHECK(kind_of([] { convergence_sweep(SourceModel::constant(0), {0}, QSchedule{}, {1}); }) ==
              ErrorKind::Validation);
    }
}
