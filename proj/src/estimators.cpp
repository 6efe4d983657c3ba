#include "recur/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "recur/error.hpp"
#include "recur/recurrence.hpp"
#include "recur/rng.hpp"
#include "recur/stats.hpp"

namespace recur {

namespace {

std::vector<std::int64_t> shifted_starts(std::size_t q)
{
    std::vector<std::int64_t> starts(q);
    std::iota(starts.begin(), starts.end(), std::int64_t{2});  // T^i x has its block at x_{i+1}
    return starts;
}

EstimateReport summarize(std::span<const RecurrenceOutcome> outcomes, std::size_t n, std::uint64_t w_max)
{
    EstimateReport rep;
    rep.n = n;
    rep.q = outcomes.size();
    rep.w_max = w_max;
    const double imputed = std::log2(static_cast<double>(w_max));
    double sum = 0.0;
    for (const auto& o : outcomes) {
        if (o.found()) {
            sum += std::log2(static_cast<double>(o.r()));
        } else {
            sum += imputed;
            ++rep.censored_count;
        }
    }
    rep.estimate_bits = sum / static_cast<double>(n) / static_cast<double>(outcomes.size());
    rep.flag = rep.censored_count > 0 ? EstimateFlag::LowerBound : EstimateFlag::Exact;
    return rep;
}

void check_estimate_args(std::size_t n, std::uint64_t w_max)
{
    if (n == 0) throw Error(ErrorKind::Validation, "n: block length must be at least 1");
    if (w_max == 0) throw Error(ErrorKind::Validation, "w_max: must be at least 1");
}

}  // namespace

std::size_t QSchedule::windows(std::size_t n) const
{
    const double q = std::ceil(c * std::pow(static_cast<double>(n), k));
    return q < 1.0 ? 1 : static_cast<std::size_t>(q);
}

void QSchedule::validate() const
{
    if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorKind::Validation, "schedule.c: must be positive");
    if (!(k > 0.0) || !std::isfinite(k)) throw Error(ErrorKind::Validation, "schedule.k: must be positive and finite");
}

std::string_view to_string(EstimateFlag flag)
{
    switch (flag) {
    case EstimateFlag::Exact: return "exact";
    case EstimateFlag::LowerBound: return "lower_bound";
    case EstimateFlag::Biased: return "biased";
    }
    return "unknown";
}

std::uint64_t default_w_max(std::size_t n, double entropy_bits)
{
    const double exponent = static_cast<double>(n) * (entropy_bits + 1.0);
    if (exponent >= 26.0) return kWindowCap;
    const auto w = static_cast<std::uint64_t>(std::ceil(std::exp2(exponent))) + n;
    return std::min(w, kWindowCap);
}

EstimateReport estimate_Jn(const Realization& real, std::size_t n, const QSchedule& schedule,
                           std::uint64_t w_max)
{
    check_estimate_args(n, w_max);
    schedule.validate();
    const auto q = schedule.windows(n);
    if (real.past_length() < w_max) {
        throw Error(ErrorKind::InsufficientData, "past has " + std::to_string(real.past_length()) +
                                                     " symbols, w_max is " + std::to_string(w_max));
    }
    if (real.future_length() < q + n) {
        throw Error(ErrorKind::InsufficientData, "present has " + std::to_string(real.future_length()) +
                                                     " symbols, Q(n) + n = " + std::to_string(q + n));
    }
    const auto starts = shifted_starts(q);
    const auto outcomes = recurrence_windows(real, n, starts, w_max);
    return summarize(outcomes, n, w_max);
}

EstimateReport estimate_Jn(StreamingPath& path, std::size_t n, const QSchedule& schedule, std::uint64_t w_max)
{
    check_estimate_args(n, w_max);
    schedule.validate();
    const auto q = schedule.windows(n);
    if (path.present().size() < q + n) {
        throw Error(ErrorKind::InsufficientData, "present has " + std::to_string(path.present().size()) +
                                                     " symbols, Q(n) + n = " + std::to_string(q + n));
    }
    const auto starts = shifted_starts(q);
    const auto outcomes = recurrence_windows(path, n, starts, w_max);
    return summarize(outcomes, n, w_max);
}

EstimateReport estimate_match_dual(const Realization& real, std::size_t m, std::size_t q)
{
    if (m < 2) throw Error(ErrorKind::Validation, "m: must be at least 2");
    if (q == 0) throw Error(ErrorKind::Validation, "q: must be at least 1");
    if (real.past_length() + 1 < m) {
        throw Error(ErrorKind::InsufficientData, "past has " + std::to_string(real.past_length()) +
                                                     " symbols, the first shifted window needs " +
                                                     std::to_string(m - 1));
    }
    if (real.future_length() < q + 1) {
        throw Error(ErrorKind::InsufficientData, "present must exceed the window count");
    }
    EstimateReport rep;
    rep.n = m;
    rep.q = q;
    const double log_m = std::log2(static_cast<double>(m));
    double sum = 0.0;
    for (std::size_t i = 1; i <= q; ++i) {
        const auto match = match_length(real, m, i);
        auto len = match.length();
        if (!match.exact() || len == 0) {
            ++rep.censored_count;
            len = std::max<std::size_t>(len, 1);
        }
        sum += log_m / static_cast<double>(len);
    }
    rep.estimate_bits = sum / static_cast<double>(q);
    rep.flag = rep.censored_count > 0 ? EstimateFlag::Biased : EstimateFlag::Exact;
    return rep;
}

SweepResult convergence_sweep(const SourceModel& model, const std::vector<std::size_t>& n_list,
                              const QSchedule& schedule, const std::vector<std::uint64_t>& seeds,
                              std::optional<std::uint64_t> w_max_override, Parallelism par)
{
    schedule.validate();
    if (n_list.empty() || seeds.empty()) throw Error(ErrorKind::Validation, "n_list and seeds must be nonempty");
    for (auto n : n_list)
        if (n == 0) throw Error(ErrorKind::Validation, "n_list: block lengths must be at least 1");

    SweepResult result;
    result.entropy_bits = entropy_rate(model).bits_per_symbol;
    const auto per_n = seeds.size();
    result.rows.resize(n_list.size() * per_n);

    parallel_for(result.rows.size(), par, [&](std::size_t idx) {
        const auto n = n_list[idx / per_n];
        const auto seed = seeds[idx % per_n];
        const auto w_max = w_max_override.value_or(default_w_max(n, result.entropy_bits));
        StreamingPath path(model, schedule.windows(n) + n, derive_seed(seed, n));
        result.rows[idx] = SweepRow{seed, estimate_Jn(path, n, schedule, w_max)};
    });

    for (std::size_t a = 0; a < n_list.size(); ++a) {
        SweepSummary s;
        s.n = n_list[a];
        s.q = schedule.windows(s.n);
        s.w_max = w_max_override.value_or(default_w_max(s.n, result.entropy_bits));
        std::vector<double> values;
        double abs_err = 0.0;
        for (std::size_t b = 0; b < per_n; ++b) {
            const auto& rep = result.rows[a * per_n + b].report;
            values.push_back(rep.estimate_bits);
            abs_err += std::abs(rep.estimate_bits - result.entropy_bits);
            s.censored_total += rep.censored_count;
        }
        const auto ms = mean_sd(values);
        s.mean = ms.mean;
        s.sd = ms.sd;
        s.mean_abs_error = abs_err / static_cast<double>(per_n);
        result.summary.push_back(s);
    }
    return result;
}

}  // namespace recur
