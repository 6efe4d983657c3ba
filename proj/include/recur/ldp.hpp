#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "recur/parallel.hpp"
#include "recur/sources.hpp"

namespace recur {

enum class TailSide { Upper, Lower, Aep, MatchUpper, MatchLower };

std::string_view to_string(TailSide side);
TailSide parse_tail_side(std::string_view text);

/// Whether the tail events compare R_n strictly with the threshold t
/// (R_n > t, R_n < t; the default) or weakly (R_n >= t, R_n <= t).
enum class Boundary { Strict, Weak };

inline constexpr double kThresholdGuard = 1073741824.0;  // 2^30

struct TailEstimate {
    std::size_t n = 0;  // block length; the window m for match sides
    double epsilon = 0.0;
    TailSide side = TailSide::Upper;
    std::uint64_t trials = 0;
    std::uint64_t hits = 0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    double threshold = 0.0;  // t for recurrence sides, a length for match sides
    std::uint64_t master_seed = 0;
};

/// P(log2 R_n / n > H + eps): each trial draws a fresh stationary path from
/// derive_seed(master_seed, trial) and decides R_n > 2^{n(H+eps)} exactly.
TailEstimate mc_tail_upper(const SourceModel& model, std::size_t n, double epsilon, std::uint64_t trials,
                           std::uint64_t master_seed, Boundary boundary = Boundary::Strict, Parallelism par = {});

/// P(log2 R_n / n < H - eps). Rejects eps >= H with EpsilonExceedsEntropy.
TailEstimate mc_tail_lower(const SourceModel& model, std::size_t n, double epsilon, std::uint64_t trials,
                           std::uint64_t master_seed, Boundary boundary = Boundary::Strict, Parallelism par = {});

/// Match-length tails: MatchUpper counts L_m < log2(m) / (H + eps),
/// MatchLower counts L_m > log2(m) / (H - eps).
TailEstimate mc_tail_match(const SourceModel& model, std::size_t m, double epsilon, TailSide side,
                           std::uint64_t trials, std::uint64_t master_seed, Parallelism par = {});

/// Monte Carlo P(|-log2 P(X_1^n) / n - H| > delta).
TailEstimate mc_tail_aep(const SourceModel& model, std::size_t n, double delta, std::uint64_t trials,
                         std::uint64_t master_seed, Parallelism par = {});

/// Largest m for which the match-upper event coincides with the upper
/// recurrence event at block length n: floor(2^{n(H+eps)}).
std::size_t match_window_for(std::size_t n, double entropy_bits, double epsilon);

struct AepTail {
    double probability = 0.0;
    double ln_probability = 0.0;  // -inf when the atypical set is empty
};

/// Exact mass of the blocks outside the delta-typical set. Binary IID models
/// use the binomial shortcut (n <= 10^4); everything else is enumerated
/// (alphabet^n <= 2^22).
AepTail aep_tail_exact(const SourceModel& model, std::size_t n, double delta);

struct CramerRate {
    double level_nats = 0.0;
    double rate_nats = 0.0;
    double argmax_lambda = 0.0;
    bool degenerate = false;  // -ln p(X) is a.s. constant
};

/// I(a) = sup_lambda [lambda a - ln sum_i p_i^{1-lambda}], the rate function
/// of the sample mean of -ln p(X_k).
CramerRate cramer_rate_iid(std::span<const double> pmf, double level_nats);

struct RatePoint {
    double n = 0.0;
    double p_hat = 0.0;
    std::uint64_t hits = 0;
};

inline constexpr std::uint64_t kMinFitHits = 5;

struct RateFit {
    double epsilon = 0.0;
    TailSide side = TailSide::Upper;
    std::vector<RatePoint> points;  // the points that entered the fit
    double slope_nats = 0.0;        // -d ln p / dn
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t excluded_zero_points = 0;
};

/// Least squares of ln p_hat on n over the points with at least 5 hits.
RateFit fit_rate(std::span<const RatePoint> points, double epsilon, TailSide side);

struct KimResult {
    std::size_t samples = 0;
    double ks_distance = 0.0;
    double mean_u = 0.0;
    std::size_t censored = 0;
    double block_probability = 0.0;
    std::uint64_t window = 0;
};

/// Conditional law of U = R_n P(block) given X_1^n = block: pasts are drawn
/// from the conditional law, and U is compared with the unit exponential.
KimResult kim_check(const SourceModel& model, std::span<const Symbol> block, std::size_t samples,
                    std::uint64_t master_seed, double u_max = 10.0, Parallelism par = {});

struct KacResult {
    std::size_t samples = 0;
    double mean_rn = 0.0;
    double target = 0.0;  // 1 / P(block)
    double rel_err = 0.0;
    std::size_t censored = 0;
};

/// Conditional mean of R_n given the block against 1 / P(block). Returns
/// beyond u_max / P(block) are censored and left out of the mean.
KacResult kac_check(const SourceModel& model, std::span<const Symbol> block, std::size_t samples,
                    std::uint64_t master_seed, double u_max = 1000.0, Parallelism par = {});

/// Serial implementations over fully materialized realizations and the naive
/// scanner. Same seeds and draw order as the fast paths, so the counts must
/// agree exactly.
namespace reference {

TailEstimate mc_tail_upper(const SourceModel& model, std::size_t n, double epsilon, std::uint64_t trials,
                           std::uint64_t master_seed, Boundary boundary = Boundary::Strict);
TailEstimate mc_tail_lower(const SourceModel& model, std::size_t n, double epsilon, std::uint64_t trials,
                           std::uint64_t master_seed, Boundary boundary = Boundary::Strict);
TailEstimate mc_tail_match(const SourceModel& model, std::size_t m, double epsilon, TailSide side,
                           std::uint64_t trials, std::uint64_t master_seed);
/// R_n per conditional sample (0 when censored).
std::vector<std::uint64_t> conditional_returns(const SourceModel& model, std::span<const Symbol> block,
                                               std::size_t samples, std::uint64_t master_seed,
                                               std::uint64_t window);

}  // namespace reference

}  // namespace recur
