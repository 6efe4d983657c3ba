#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "recur/parallel.hpp"
#include "recur/realization.hpp"
#include "recur/sources.hpp"

namespace recur {

/// Number of shifted windows, Q(n) = max(1, ceil(c * n^k)).
struct QSchedule {
    double c = 1.0;
    double k = 2.0;

    std::size_t windows(std::size_t n) const;
    void validate() const;
};

enum class EstimateFlag {
    Exact,
    LowerBound,  // some recurrence windows were censored and imputed at w_max
    Biased,      // some match lengths were future-limited (or empty) and imputed
};

std::string_view to_string(EstimateFlag flag);

struct EstimateReport {
    std::size_t n = 0;  // block length, or the window m for the match dual
    std::size_t q = 0;
    double estimate_bits = 0.0;
    std::size_t censored_count = 0;
    EstimateFlag flag = EstimateFlag::Exact;
    std::uint64_t w_max = 0;
};

inline constexpr std::uint64_t kWindowCap = std::uint64_t{1} << 26;

/// ceil(2^{n(H+1)}) + n, capped at 2^26 symbols.
std::uint64_t default_w_max(std::size_t n, double entropy_bits);

/// J_n = (1/Q) sum_{i=1..Q} log2(R_{n,i}) / n, where R_{n,i} is the
/// recurrence time of the shifted path T^i x (block x_{i+1}^{i+n}, past up to
/// x_i). Shifts are searched up to w_max; censored windows contribute
/// log2(w_max) / n and mark the estimate as a lower bound.
EstimateReport estimate_Jn(const Realization& real, std::size_t n, const QSchedule& schedule,
                           std::uint64_t w_max);

/// Same estimate with the past drawn on demand. `path` needs Q(n) + n
/// present symbols.
EstimateReport estimate_Jn(StreamingPath& path, std::size_t n, const QSchedule& schedule, std::uint64_t w_max);

/// Match-length dual (1/Q) sum_{i=1..Q} log2(m) / L_{m,i} over the same
/// shifted paths. Future-limited matches enter with their attained length,
/// an empty match with length 1; either sets the Biased flag.
EstimateReport estimate_match_dual(const Realization& real, std::size_t m, std::size_t q);

struct SweepRow {
    std::uint64_t seed = 0;
    EstimateReport report;
};

struct SweepSummary {
    std::size_t n = 0;
    std::size_t q = 0;
    std::uint64_t w_max = 0;
    double mean = 0.0;
    double sd = 0.0;
    double mean_abs_error = 0.0;  // mean |J_n - H| over seeds
    std::size_t censored_total = 0;
};

struct SweepResult {
    double entropy_bits = 0.0;
    std::vector<SweepRow> rows;  // n-major, seeds in the given order
    std::vector<SweepSummary> summary;
};

/// J_n for every (n, seed). Each pair draws its own path from
/// derive_seed(seed, n), so rows do not depend on the thread count.
/// `w_max_override` replaces the default window for every n when set.
SweepResult convergence_sweep(const SourceModel& model, const std::vector<std::size_t>& n_list,
                              const QSchedule& schedule, const std::vector<std::uint64_t>& seeds,
                              std::optional<std::uint64_t> w_max_override = std::nullopt, Parallelism par = {});

}  // namespace recur
