#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "recur/error.hpp"
#include "recur/sources.hpp"

using namespace recur;

namespace {

// Independent entropy oracle: the textbook sums, no shared code with the library.
double binary_entropy(double p)
{
    return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

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

// Enumerates all blocks of length n over {0, 1}.
template <class F>
void for_each_binary_block(std::size_t n, F&& f)
{
    std::vector<Symbol> b(n);
    for (std::uint32_t code = 0; code < (1u << n); ++code) {
        for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<Symbol>((code >> i) & 1u);
        f(b);
    }
}

const TransitionMatrix kSkew{{0.9, 0.1}, {0.5, 0.5}};
const TransitionMatrix kFlip{{0.9, 0.1}, {0.1, 0.9}};

}  // namespace

TEST_CASE("stationary distribution of the skewed two-state chain")
{
    // 0.1 pi0 = 0.5 pi1 and pi0 + pi1 = 1 give (5/6, 1/6).
    const auto pi = stationary_distribution(kSkew);
    CHECK(pi[0] == doctest::Approx(5.0 / 6).epsilon(1e-14));
    CHECK(pi[1] == doctest::Approx(1.0 / 6).epsilon(1e-14));
}

TEST_CASE("doubly stochastic chains have the uniform stationary law")
{
    const TransitionMatrix p{{0.2, 0.5, 0.3}, {0.5, 0.1, 0.4}, {0.3, 0.4, 0.3}};
    for (double x : stationary_distribution(p)) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("identity chain is rejected as reducible")
{
    CHECK(kind_of([] { stationary_distribution({{1, 0}, {0, 1}}); }) == ErrorKind::NotIrreducible);
    CHECK(kind_of([] { SourceModel::markov({{1, 0}, {0, 1}}); }) == ErrorKind::NotIrreducible);
}

TEST_CASE("stationary vector is a fixed point and matches power iteration")
{
    const TransitionMatrix p{{0.1, 0.6, 0.3, 0.0}, {0.0, 0.2, 0.5, 0.3}, {0.4, 0.0, 0.1, 0.5}, {0.7, 0.1, 0.0, 0.2}};
    const auto pi = stationary_distribution(p);
    CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t j = 0; j < 4; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < 4; ++i) s += pi[i] * p[i][j];
        CHECK(std::abs(s - pi[j]) <= 1e-10);
    }
    const auto power = power_iteration_stationary(p);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(power[i] - pi[i]) <= 1e-8);
}

TEST_CASE("large chains go through power iteration")
{
    // Lazy random walk on a 70-cycle: doubly stochastic, so pi is uniform.
    const std::size_t n = 70;
    TransitionMatrix p(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        p[i][i] = 0.5;
        p[i][(i + 1) % n] = 0.25;
        p[i][(i + n - 1) % n] = 0.25;
    }
    for (double x : stationary_distribution(p)) CHECK(x == doctest::Approx(1.0 / n).epsilon(1e-9));
}

TEST_CASE("classify_chain")
{
    SUBCASE("two-cycle has period 2")
    {
        const auto c = classify_chain({{0, 1}, {1, 0}});
        CHECK(c.irreducible);
        CHECK(c.period == 2);
        CHECK_FALSE(c.aperiodic);
    }
    SUBCASE("positive matrix is aperiodic")
    {
        const auto c = classify_chain({{0.5, 0.5}, {0.5, 0.5}});
        CHECK(c.irreducible);
        CHECK(c.aperiodic);
        CHECK(c.period == 1);
    }
    SUBCASE("absorbing state breaks irreducibility")
    {
        CHECK_FALSE(classify_chain({{1, 0}, {0.5, 0.5}}).irreducible);
    }
    SUBCASE("three-cycle with a chord")
    {
        // Cycles of length 3 and 2 through state 0: gcd 1.
        const auto c = classify_chain({{0, 1, 0}, {0.5, 0, 0.5}, {1, 0, 0}});
        CHECK(c.irreducible);
        CHECK(c.period == 1);
    }
    SUBCASE("bipartite four-state chain")
    {
        const auto c = classify_chain({{0, 0.5, 0, 0.5}, {0.5, 0, 0.5, 0}, {0, 0.5, 0, 0.5}, {0.5, 0, 0.5, 0}});
        CHECK(c.period == 2);
    }
    SUBCASE("aperiodic iff period 1 on random irreducible chains")
    {
        Rng rng(11);
        for (int rep = 0; rep < 200; ++rep) {
            const int n = 2 + static_cast<int>(rng.next_u64() % 5);
            TransitionMatrix p(n, std::vector<double>(n, 0.0));
            for (int i = 0; i < n; ++i) {
                p[i][(i + 1) % n] = 1.0;  // a Hamiltonian cycle keeps it irreducible
                if (rng.uniform() < 0.3) {
                    const int j = static_cast<int>(rng.next_u64() % n);
                    p[i][(i + 1) % n] = 0.5;
                    p[i][j] += 0.5;
                }
            }
            const auto c = classify_chain(p);
            CHECK(c.irreducible);
            CHECK(c.aperiodic == (c.period == 1));
        }
    }
}

TEST_CASE("validation errors name the offending entry")
{
    try {
        SourceModel::markov({{0.5, 0.5}, {0.3, 0.6}});
        FAIL("accepted a non-stochastic row");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
        CHECK(std::string(e.what()).find("transition[1]") != std::string::npos);
    }
    try {
        SourceModel::iid({0.5, -0.1, 0.6});
        FAIL("accepted a negative entry");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("pmf[1]") != std::string::npos);
    }
    CHECK(kind_of([] { SourceModel::iid({1.0, 0.0}); }) == ErrorKind::Validation);
    CHECK(kind_of([] { SourceModel::iid({1.0}); }) == ErrorKind::Validation);
    CHECK(kind_of([] { SourceModel::periodic({}); }) == ErrorKind::Validation);
}

TEST_CASE("entropy rates")
{
    CHECK(entropy_rate(SourceModel::iid({0.5, 0.5})).bits_per_symbol == doctest::Approx(1.0).epsilon(1e-15));
    const double h03 = entropy_rate(SourceModel::iid({0.7, 0.3})).bits_per_symbol;
    CHECK(h03 == doctest::Approx(binary_entropy(0.3)).epsilon(1e-14));
    CHECK(h03 == doctest::Approx(0.88129).epsilon(1e-5));
    const double hflip = entropy_rate(SourceModel::markov(kFlip)).bits_per_symbol;
    CHECK(hflip == doctest::Approx(binary_entropy(0.1)).epsilon(1e-14));
    CHECK(hflip == doctest::Approx(0.46900).epsilon(1e-5));
    CHECK(entropy_rate(SourceModel::constant(0)).bits_per_symbol == 0.0);
    CHECK(entropy_rate(SourceModel::periodic({0, 1, 1})).bits_per_symbol == 0.0);

    const auto iid = SourceModel::iid({0.1, 0.2, 0.3, 0.4});
    const double h = entropy_rate(iid).bits_per_symbol;
    CHECK(h >= 0.0);
    CHECK(h <= 2.0);
}

TEST_CASE("generate")
{
    SUBCASE("constant")
    {
        CHECK(generate(SourceModel::constant(0), 5, 1) == std::vector<Symbol>{0, 0, 0, 0, 0});
    }
    SUBCASE("periodic gives one of the two phases")
    {
        const auto x = generate(SourceModel::periodic({0, 1}), 4, 3);
        CHECK((x == std::vector<Symbol>{0, 1, 0, 1} || x == std::vector<Symbol>{1, 0, 1, 0}));
        bool saw0 = false, saw1 = false;
        for (std::uint64_t s = 0; s < 64; ++s) {
            const auto y = generate(SourceModel::periodic({0, 1}), 4, s);
            (y[0] == 0 ? saw0 : saw1) = true;
        }
        CHECK(saw0);
        CHECK(saw1);
    }
    SUBCASE("markov frequencies converge to pi")
    {
        const auto x = generate(SourceModel::markov(kSkew), 1'000'000, 5);
        const double ones = static_cast<double>(std::count(x.begin(), x.end(), Symbol{1})) / x.size();
        CHECK(std::abs(ones - 1.0 / 6) <= 0.01);
    }
    SUBCASE("reproducible")
    {
        const auto m = SourceModel::iid({0.2, 0.3, 0.5});
        CHECK(generate(m, 1000, 42) == generate(m, 1000, 42));
        CHECK(generate(m, 1000, 42) != generate(m, 1000, 43));
    }
}

TEST_CASE("conditional past sampling")
{
    SUBCASE("iid pasts follow the pmf")
    {
        const auto m = SourceModel::iid({0.7, 0.3});
        const std::vector<Symbol> block{1, 1};
        const auto past = generate_past_given_block(m, block, 200000, 9);
        const double ones = static_cast<double>(std::count(past.begin(), past.end(), Symbol{1})) / past.size();
        CHECK(std::abs(ones - 0.3) <= 0.005);
    }
    SUBCASE("flip chain: lag-1 symbol repeats the block start 90% of the time")
    {
        const auto m = SourceModel::markov(kFlip);
        const std::vector<Symbol> block{1, 0};
        int same = 0;
        const int draws = 100000;
        for (int s = 0; s < draws; ++s) same += generate_past_given_block(m, block, 1, s).back() == 1;
        CHECK(std::abs(same / double(draws) - 0.9) <= 0.005);
    }
    SUBCASE("reversed kernel")
    {
        const auto m = SourceModel::markov(kSkew);
        CHECK(m.reversed_transition(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(m.reversed_transition(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
        // Row 0: pi_0 0.9 / pi_0 = 0.9 and pi_1 0.5 / pi_0 = 0.1.
        CHECK(m.reversed_transition(0, 0) == doctest::Approx(0.9).epsilon(1e-12));
        CHECK(m.reversed_transition(0, 1) == doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("reversed kernel has the joint law of a stationary pair")
    {
        const auto m = SourceModel::markov({{0.2, 0.5, 0.3}, {0.6, 0.1, 0.3}, {0.25, 0.25, 0.5}});
        const auto pi = m.marginal();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(pi[i] * m.reversed_transition(i, j) == doctest::Approx(pi[j] * m.transition(j, i)));
    }
    SUBCASE("unsupported models")
    {
        const std::vector<Symbol> block{0};
        CHECK(kind_of([&] { generate_past_given_block(SourceModel::constant(0), block, 4, 1); }) ==
              ErrorKind::ModelUnsupported);
        CHECK(kind_of([&] { generate_past_given_block(SourceModel::periodic({0, 1}), block, 4, 1); }) ==
              ErrorKind::ModelUnsupported);
    }
}

TEST_CASE("block probabilities")
{
    const auto uniform = SourceModel::iid({0.5, 0.5});
    for_each_binary_block(8, [&](const std::vector<Symbol>& b) {
        CHECK(block_probability(uniform, b).probability == std::exp2(-8.0));
    });
    const std::vector<Symbol> b100{1, 0, 0};
    CHECK(block_probability(SourceModel::iid({0.7, 0.3}), b100).probability == doctest::Approx(0.147).epsilon(1e-14));
    const std::vector<Symbol> b001{0, 0, 1};
    const auto bp = block_probability(SourceModel::markov(kSkew), b001);
    CHECK(bp.probability == doctest::Approx(0.075).epsilon(1e-14));
    CHECK(bp.log2_probability == doctest::Approx(std::log2(0.075)).epsilon(1e-14));

    const std::vector<Symbol> b10{1, 0};
    CHECK(kind_of([&] { block_probability(SourceModel::constant(0), b10); }) == ErrorKind::ZeroProbability);
    CHECK(kind_of([&] { block_probability(SourceModel::markov({{0, 1}, {1, 0}}), b100); }) ==
          ErrorKind::ZeroProbability);
    const std::vector<Symbol> b0101{0, 1, 0, 1};
    CHECK(block_probability(SourceModel::periodic({0, 1}), b0101).probability == 0.5);

    SUBCASE("log space survives long blocks")
    {
        std::vector<Symbol> ones(5000, 1);
        const auto p = block_probability(SourceModel::iid({0.7, 0.3}), ones);
        CHECK(p.probability == 0.0);
        CHECK(p.log2_probability == doctest::Approx(5000 * std::log2(0.3)));
    }
}

TEST_CASE("block probabilities sum to one")
{
    const std::vector<SourceModel> models{SourceModel::iid({0.7, 0.3}), SourceModel::markov(kSkew),
                                          SourceModel::markov(kFlip), SourceModel::periodic({0, 1, 1})};
    for (const auto& m : models) {
        for (std::size_t n : {1u, 5u, 12u}) {
            double total = 0.0;
            for_each_binary_block(n, [&](const std::vector<Symbol>& b) {
                try {
                    total += block_probability(m, b).probability;
                } catch (const Error& e) {
                    REQUIRE(e.kind() == ErrorKind::ZeroProbability);
                }
            });
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("per-symbol block entropy approaches the rate")
{
    for (const auto& p : {kSkew, kFlip}) {
        const auto m = SourceModel::markov(p);
        const std::size_t n = 10;
        double acc = 0.0;
        for_each_binary_block(n, [&](const std::vector<Symbol>& b) {
            const auto bp = block_probability(m, b);
            acc -= bp.probability * bp.log2_probability;
        });
        CHECK(std::abs(acc / n - entropy_rate(m).bits_per_symbol) <= 2.0 * std::log2(2.0) / n);
    }
}
