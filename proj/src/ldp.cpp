#include "recur/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "recur/error.hpp"
#include "recur/realization.hpp"
#include "recur/recurrence.hpp"
#include "recur/rng.hpp"
#include "recur/stats.hpp"

namespace recur {

namespace {

constexpr double kTypicalSlack = 1e-12;
constexpr double kRealizationGuard = 268435456.0;  // 2^28 symbols

// Every recurrence tail reduces to "does x_1^n return within `limit` shifts".
struct RecurrenceEvent {
    double t = 0.0;
    std::uint64_t limit = 0;
    bool hit_on_return = false;
};

void check_common(std::size_t n, double epsilon, std::uint64_t trials)
{
    if (n == 0) throw Error(ErrorKind::Validation, "n: block length must be at least 1");
    if (!std::isfinite(epsilon)) throw Error(ErrorKind::Validation, "epsilon: must be finite");
    if (trials == 0) throw Error(ErrorKind::Validation, "trials: must be at least 1");
}

void guard_threshold(double t, std::size_t n)
{
    if (t > kThresholdGuard) {
        throw Error(ErrorKind::ThresholdTooLarge,
                    "threshold 2^" + std::to_string(std::log2(t)) + " exceeds 2^30 at n = " + std::to_string(n) +
                        "; recurrence times grow like 2^{nH}, so reduce n or epsilon");
    }
}

RecurrenceEvent upper_event(const SourceModel& model, std::size_t n, double epsilon, Boundary boundary)
{
    const double h = entropy_rate(model).bits_per_symbol;
    RecurrenceEvent ev;
    ev.t = std::exp2(static_cast<double>(n) * (h + epsilon));
    guard_threshold(ev.t, n);
    // R > t  <=> no return within floor(t);  R >= t <=> none within ceil(t) - 1.
    ev.limit = boundary == Boundary::Strict ? static_cast<std::uint64_t>(std::floor(ev.t))
                                            : static_cast<std::uint64_t>(std::ceil(ev.t)) - 1;
    ev.hit_on_return = false;
    return ev;
}

RecurrenceEvent lower_event(const SourceModel& model, std::size_t n, double epsilon, Boundary boundary)
{
    const double h = entropy_rate(model).bits_per_symbol;
    if (epsilon >= h) {
        throw Error(ErrorKind::EpsilonExceedsEntropy,
                    "epsilon " + std::to_string(epsilon) + " >= entropy rate " + std::to_string(h) +
                        "; the lower tail event log R_n / n < H - epsilon is empty");
    }
    RecurrenceEvent ev;
    ev.t = std::exp2(static_cast<double>(n) * (h - epsilon));
    guard_threshold(ev.t, n);
    // R < t  <=> return within ceil(t) - 1;  R <= t <=> within floor(t).
    ev.limit = boundary == Boundary::Strict ? static_cast<std::uint64_t>(std::ceil(ev.t)) - 1
                                            : static_cast<std::uint64_t>(std::floor(ev.t));
    ev.hit_on_return = true;
    return ev;
}

TailEstimate finish(std::size_t n, double epsilon, TailSide side, std::uint64_t trials, std::uint64_t hits,
                    double threshold, std::uint64_t seed)
{
    TailEstimate est;
    est.n = n;
    est.epsilon = epsilon;
    est.side = side;
    est.trials = trials;
    est.hits = hits;
    est.p_hat = static_cast<double>(hits) / static_cast<double>(trials);
    const auto ci = wilson_interval(hits, trials);
    est.ci_low = ci.low;
    est.ci_high = ci.high;
    est.threshold = threshold;
    est.master_seed = seed;
    return est;
}

template <class Trial>
std::uint64_t count_hits(std::uint64_t trials, Parallelism par, Trial&& trial)
{
    std::vector<char> hit(trials, 0);
    parallel_for(trials, par, [&](std::size_t i) { hit[i] = trial(i) ? 1 : 0; });
    return static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), 1));
}

TailEstimate recurrence_tail(const SourceModel& model, std::size_t n, double epsilon, TailSide side,
                             const RecurrenceEvent& ev, std::uint64_t trials, std::uint64_t seed, Parallelism par)
{
    const auto hits = count_hits(trials, par, [&](std::size_t i) {
        StreamingPath path(model, n, derive_seed(seed, i));
        return returns_within(path, n, ev.limit) == ev.hit_on_return;
    });
    return finish(n, epsilon, side, trials, hits, ev.t, seed);
}

struct MatchEvent {
    double threshold = 0.0;
    std::size_t target = 0;  // decisive match length
    bool hit_when_reached = false;
};

MatchEvent match_event(const SourceModel& model, std::size_t m, double epsilon, TailSide side)
{
    if (m < 2) throw Error(ErrorKind::Validation, "m: must be at least 2");
    if (static_cast<double>(m) > kRealizationGuard)
        throw Error(ErrorKind::ThresholdTooLarge, "m exceeds the 2^28 symbol realization cap");
    const double h = entropy_rate(model).bits_per_symbol;
    const double log_m = std::log2(static_cast<double>(m));
    MatchEvent ev;
    if (side == TailSide::MatchUpper) {
        if (!(h + epsilon > 0.0)) throw Error(ErrorKind::Validation, "epsilon: H + epsilon must be positive");
        // L < c <=> L < ceil(c).
        ev.threshold = log_m / (h + epsilon);
        ev.target = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ev.threshold)));
        ev.hit_when_reached = false;
    } else if (side == TailSide::MatchLower) {
        if (epsilon >= h) {
            throw Error(ErrorKind::EpsilonExceedsEntropy,
                        "epsilon " + std::to_string(epsilon) + " >= entropy rate " + std::to_string(h));
        }
        // L > c <=> L >= floor(c) + 1.
        ev.threshold = log_m / (h - epsilon);
        ev.target = static_cast<std::size_t>(std::floor(ev.threshold)) + 1;
        ev.hit_when_reached = true;
    } else {
        throw Error(ErrorKind::Validation, "side: match tails take match_upper or match_lower");
    }
    if (static_cast<double>(ev.target) > kRealizationGuard)
        throw Error(ErrorKind::ThresholdTooLarge, "match-length threshold exceeds the realization cap");
    return ev;
}

bool atypical(double log2p, std::size_t n, double h, double delta)
{
    return std::abs(-log2p / static_cast<double>(n) - h) > delta + kTypicalSlack;
}

std::uint64_t checked_window(double u_max, double p)
{
    if (!(u_max > 0.0)) throw Error(ErrorKind::Validation, "u_max: must be positive");
    const double w = std::ceil(u_max / p);
    if (w > kRealizationGuard) {
        throw Error(ErrorKind::ThresholdTooLarge, "conditional past of " + std::to_string(w) +
                                                      " symbols exceeds the 2^28 cap");
    }
    return static_cast<std::uint64_t>(w);
}

BlockProbability conditioned_block(const SourceModel& model, std::span<const Symbol> block)
{
    if (model.kind() == SourceKind::Periodic)
        throw Error(ErrorKind::ModelUnsupported, "conditional sampling is not defined for periodic models");
    if (block.empty()) throw Error(ErrorKind::Validation, "block: must be nonempty");
    try {
        return block_probability(model, block);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ZeroProbability) throw Error(ErrorKind::BlockZeroProbability, e.what());
        throw;
    }
}

std::vector<std::uint64_t> fast_conditional_returns(const SourceModel& model, std::span<const Symbol> block,
                                                    std::size_t samples, std::uint64_t seed, std::uint64_t window,
                                                    Parallelism par)
{
    std::vector<std::uint64_t> r(samples, 0);
    parallel_for(samples, par, [&](std::size_t i) {
        StreamingPath path(model, block, derive_seed(seed, i));
        const auto out = first_return(path, block.size(), window);
        r[i] = out.found() ? out.r() : 0;
    });
    return r;
}

double log_sum_exp(const std::vector<double>& terms)
{
    if (terms.empty()) return -std::numeric_limits<double>::infinity();
    const double top = *std::max_element(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - top);
    return top + std::log(acc);
}

}  // namespace

std::string_view to_string(TailSide side)
{
    switch (side) {
    case TailSide::Upper: return "upper";
    case TailSide::Lower: return "lower";
    case TailSide::Aep: return "aep";
    case TailSide::MatchUpper: return "match_upper";
    case TailSide::MatchLower: return "match_lower";
    }
    return "unknown";
}

TailSide parse_tail_side(std::string_view text)
{
    if (text == "upper") return TailSide::Upper;
    if (text == "lower") return TailSide::Lower;
    if (text == "aep") return TailSide::Aep;
    if (text == "match_upper") return TailSide::MatchUpper;
    if (text == "match_lower") return TailSide::MatchLower;
    throw Error(ErrorKind::Validation, "side: unknown value '" + std::string(text) +
                                           "' (expected upper, lower, aep, match_upper, match_lower)");
}

TailEstimate mc_tail_upper(const SourceModel& model, std::size_t n, double epsilon, std::uint64_t trials,
                           std::uint64_t master_seed, Boundary boundary, Parallelism par)
{
    check_common(n, epsilon, trials);
    const auto ev = upper_event(model, n, epsilon, boundary);
    return recurrence_tail(model, n, epsilon, TailSide::Upper, ev, trials, master_seed, par);
}

TailEstimate mc_tail_lower(const SourceModel& model, std::size_t n, double epsilon, std::uint64_t trials,
                           std::uint64_t master_seed, Boundary boundary, Parallelism par)
{
    check_common(n, epsilon, trials);
    const auto ev = lower_event(model, n, epsilon, boundary);
    return recurrence_tail(model, n, epsilon, TailSide::Lower, ev, trials, master_seed, par);
}

TailEstimate mc_tail_match(const SourceModel& model, std::size_t m, double epsilon, TailSide side,
                           std::uint64_t trials, std::uint64_t master_seed, Parallelism par)
{
    check_common(1, epsilon, trials);
    const auto ev = match_event(model, m, epsilon, side);
    const auto hits = count_hits(trials, par, [&](std::size_t i) {
        StreamingPath path(model, ev.target + 1, derive_seed(master_seed, i));
        const bool reached = longest_match(path, m, ev.target) >= ev.target;
        return reached == ev.hit_when_reached;
    });
    return finish(m, epsilon, side, trials, hits, ev.threshold, master_seed);
}

TailEstimate mc_tail_aep(const SourceModel& model, std::size_t n, double delta, std::uint64_t trials,
                         std::uint64_t master_seed, Parallelism par)
{
    check_common(n, delta, trials);
    if (!(delta >= 0.0)) throw Error(ErrorKind::Validation, "delta: must be >= 0");
    const double h = entropy_rate(model).bits_per_symbol;
    const auto hits = count_hits(trials, par, [&](std::size_t i) {
        const auto block = generate(model, n, derive_seed(master_seed, i));
        return atypical(block_probability(model, block).log2_probability, n, h, delta);
    });
    return finish(n, delta, TailSide::Aep, trials, hits, delta, master_seed);
}

std::size_t match_window_for(std::size_t n, double entropy_bits, double epsilon)
{
    const double t = std::exp2(static_cast<double>(n) * (entropy_bits + epsilon));
    if (t > kRealizationGuard) throw Error(ErrorKind::ThresholdTooLarge, "match window exceeds the 2^28 cap");
    return static_cast<std::size_t>(std::floor(t));
}

AepTail aep_tail_exact(const SourceModel& model, std::size_t n, double delta)
{
    if (n == 0) throw Error(ErrorKind::Validation, "n: block length must be at least 1");
    if (!(delta >= 0.0)) throw Error(ErrorKind::Validation, "delta: must be >= 0");
    const double h = entropy_rate(model).bits_per_symbol;
    const int size = model.alphabet_size();

    if (model.kind() == SourceKind::Iid && size == 2) {
        if (n > 10'000) throw Error(ErrorKind::TooLargeToEnumerate, "binomial shortcut is limited to n <= 10^4");
        const double p1 = model.marginal()[1];
        const double p0 = model.marginal()[0];
        const auto nd = static_cast<double>(n);
        std::vector<double> terms;
        for (std::size_t k = 0; k <= n; ++k) {
            const auto kd = static_cast<double>(k);
            const double log2p = kd * std::log2(p1) + (nd - kd) * std::log2(p0);
            if (!atypical(log2p, n, h, delta)) continue;
            terms.push_back(std::lgamma(nd + 1) - std::lgamma(kd + 1) - std::lgamma(nd - kd + 1) + kd * std::log(p1) +
                            (nd - kd) * std::log(p0));
        }
        const double ln_p = log_sum_exp(terms);
        return {std::exp(ln_p), ln_p};
    }

    const double blocks = std::pow(static_cast<double>(size), static_cast<double>(n));
    if (blocks > 4194304.0) {
        throw Error(ErrorKind::TooLargeToEnumerate,
                    std::to_string(size) + "^" + std::to_string(n) + " blocks exceed the 2^22 enumeration limit");
    }
    double total = 0.0;
    if (model.kind() == SourceKind::Iid || model.kind() == SourceKind::Markov) {
        // Depth-first over blocks carrying the running log-probability.
        std::vector<Symbol> block(n);
        std::vector<double> log2p(n + 1, 0.0);
        std::vector<int> next(n, 0);
        std::size_t depth = 0;
        while (true) {
            if (depth == n) {
                if (atypical(log2p[n], n, h, delta)) total += std::exp2(log2p[n]);
                --depth;
                continue;
            }
            if (next[depth] >= size) {
                next[depth] = 0;
                if (depth == 0) break;
                --depth;
                continue;
            }
            const auto s = static_cast<Symbol>(next[depth]++);
            const double p = depth == 0 ? model.marginal()[s] : model.transition(block[depth - 1], s);
            if (p <= 0.0) continue;
            block[depth] = s;
            log2p[depth + 1] = log2p[depth] + std::log2(p);
            ++depth;
        }
    } else {
        std::vector<Symbol> block(n, 0);
        const auto count = static_cast<std::size_t>(blocks);
        for (std::size_t code = 0; code < count; ++code) {
            auto c = code;
            for (std::size_t i = 0; i < n; ++i) {
                block[i] = static_cast<Symbol>(c % static_cast<std::size_t>(size));
                c /= static_cast<std::size_t>(size);
            }
            try {
                const auto bp = block_probability(model, block);
                if (atypical(bp.log2_probability, n, h, delta)) total += bp.probability;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::ZeroProbability) throw;
            }
        }
    }
    return {total, total > 0.0 ? std::log(total) : -std::numeric_limits<double>::infinity()};
}

CramerRate cramer_rate_iid(std::span<const double> pmf, double level_nats)
{
    if (pmf.size() < 2) throw Error(ErrorKind::Validation, "pmf: need at least two symbols");
    std::vector<double> p;
    std::vector<double> y;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        if (pmf[i] < 0.0) throw Error(ErrorKind::Validation, "pmf[" + std::to_string(i) + "]: negative");
        if (pmf[i] == 0.0) continue;
        p.push_back(pmf[i]);
        y.push_back(-std::log(pmf[i]));
    }
    const double y_min = *std::min_element(y.begin(), y.end());
    const double y_max = *std::max_element(y.begin(), y.end());
    constexpr double kInf = std::numeric_limits<double>::infinity();
    CramerRate out;
    out.level_nats = level_nats;

    if (y_max - y_min <= 1e-15) {
        out.degenerate = true;
        const bool at_mean = std::abs(level_nats - y_min) <= 1e-12;
        out.rate_nats = at_mean ? 0.0 : kInf;
        out.argmax_lambda = at_mean ? 0.0 : std::copysign(kInf, level_nats - y_min);
        return out;
    }
    if (level_nats < y_min || level_nats > y_max) {
        out.rate_nats = kInf;
        out.argmax_lambda = level_nats > y_max ? kInf : -kInf;
        return out;
    }
    if (level_nats == y_min || level_nats == y_max) {
        double mass = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i)
            if (y[i] == level_nats) mass += p[i];
        out.rate_nats = -std::log(mass);
        out.argmax_lambda = level_nats == y_max ? kInf : -kInf;
        return out;
    }

    // Log-MGF of Y = -ln p(X) and its derivative, shifted for stability.
    auto log_mgf = [&](double lambda, double* slope) {
        double top = -kInf;
        for (std::size_t i = 0; i < p.size(); ++i) top = std::max(top, std::log(p[i]) + lambda * y[i]);
        double z = 0.0, zy = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double w = std::exp(std::log(p[i]) + lambda * y[i] - top);
            z += w;
            zy += w * y[i];
        }
        if (slope) *slope = zy / z;
        return top + std::log(z);
    };

    // The objective is concave, so its maximizer is the root of
    // Lambda'(lambda) = a; bisect on the bracket [-50, 50].
    double lo = -50.0, hi = 50.0;
    double slope = 0.0;
    log_mgf(lo, &slope);
    if (slope >= level_nats) hi = lo;
    log_mgf(hi, &slope);
    if (slope <= level_nats) lo = hi;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        log_mgf(mid, &slope);
        (slope < level_nats ? lo : hi) = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    out.argmax_lambda = lambda;
    out.rate_nats = std::max(0.0, lambda * level_nats - log_mgf(lambda, nullptr));
    return out;
}

RateFit fit_rate(std::span<const RatePoint> points, double epsilon, TailSide side)
{
    RateFit fit;
    fit.epsilon = epsilon;
    fit.side = side;
    std::vector<double> x, y;
    for (const auto& pt : points) {
        if (pt.hits >= kMinFitHits && pt.p_hat > 0.0) {
            fit.points.push_back(pt);
            x.push_back(pt.n);
            y.push_back(std::log(pt.p_hat));
        } else {
            ++fit.excluded_zero_points;
        }
    }
    if (fit.points.size() < 3) {
        throw Error(ErrorKind::InsufficientPoints, "rate fit needs at least 3 points with >= 5 hits, have " +
                                                       std::to_string(fit.points.size()));
    }
    const auto ls = least_squares(x, y);
    fit.slope_nats = -ls.slope;
    fit.intercept = ls.intercept;
    fit.r_squared = ls.r_squared;
    return fit;
}

KimResult kim_check(const SourceModel& model, std::span<const Symbol> block, std::size_t samples,
                    std::uint64_t master_seed, double u_max, Parallelism par)
{
    if (samples == 0) throw Error(ErrorKind::Validation, "samples: must be at least 1");
    const auto bp = conditioned_block(model, block);
    KimResult res;
    res.samples = samples;
    res.block_probability = bp.probability;
    res.window = checked_window(u_max, bp.probability);

    auto r = fast_conditional_returns(model, block, samples, master_seed, res.window, par);
    std::sort(r.begin(), r.end());
    const auto first_found = std::find_if(r.begin(), r.end(), [](auto v) { return v != 0; });
    res.censored = static_cast<std::size_t>(first_found - r.begin());
    std::span<const std::uint64_t> found(&*first_found, static_cast<std::size_t>(r.end() - first_found));
    res.ks_distance = ks_exponential_lattice(found, samples, bp.probability, res.window);
    if (!found.empty()) {
        const auto sum = std::accumulate(found.begin(), found.end(), std::uint64_t{0});
        res.mean_u = static_cast<double>(sum) / static_cast<double>(found.size()) * bp.probability;
    }
    return res;
}

KacResult kac_check(const SourceModel& model, std::span<const Symbol> block, std::size_t samples,
                    std::uint64_t master_seed, double u_max, Parallelism par)
{
    if (samples == 0) throw Error(ErrorKind::Validation, "samples: must be at least 1");
    const auto bp = conditioned_block(model, block);
    const auto window = checked_window(u_max, bp.probability);
    const auto r = fast_conditional_returns(model, block, samples, master_seed, window, par);
    KacResult res;
    res.samples = samples;
    res.target = std::exp2(-bp.log2_probability);
    std::uint64_t sum = 0;
    std::size_t found = 0;
    for (auto v : r) {
        if (v == 0) {
            ++res.censored;
        } else {
            sum += v;
            ++found;
        }
    }
    if (found > 0) res.mean_rn = static_cast<double>(sum) / static_cast<double>(found);
    res.rel_err = std::abs(res.mean_rn - res.target) / res.target;
    return res;
}

namespace reference {

TailEstimate mc_tail_upper(const SourceModel& model, std::size_t n, double epsilon, std::uint64_t trials,
                           std::uint64_t master_seed, Boundary boundary)
{
    check_common(n, epsilon, trials);
    const auto ev = upper_event(model, n, epsilon, boundary);
    const auto past = static_cast<std::size_t>(std::ceil(ev.t)) + n;
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        const auto real = generate_realization(model, past, n, derive_seed(master_seed, i));
        const bool hit = boundary == Boundary::Strict ? exceeds_threshold(real, n, ev.t)
                                                      : !recurrence_naive(real, n, ev.limit).found();
        hits += hit ? 1 : 0;
    }
    return finish(n, epsilon, TailSide::Upper, trials, hits, ev.t, master_seed);
}

TailEstimate mc_tail_lower(const SourceModel& model, std::size_t n, double epsilon, std::uint64_t trials,
                           std::uint64_t master_seed, Boundary boundary)
{
    check_common(n, epsilon, trials);
    const auto ev = lower_event(model, n, epsilon, boundary);
    const auto past = static_cast<std::size_t>(std::ceil(ev.t)) + n;
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        const auto real = generate_realization(model, past, n, derive_seed(master_seed, i));
        hits += recurrence_naive(real, n, ev.limit).found() ? 1 : 0;
    }
    return finish(n, epsilon, TailSide::Lower, trials, hits, ev.t, master_seed);
}

TailEstimate mc_tail_match(const SourceModel& model, std::size_t m, double epsilon, TailSide side,
                           std::uint64_t trials, std::uint64_t master_seed)
{
    check_common(1, epsilon, trials);
    const auto ev = match_event(model, m, epsilon, side);
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        const auto real = generate_realization(model, m, ev.target + 1, derive_seed(master_seed, i));
        const auto len = match_length(real, m).length();
        hits += ((len >= ev.target) == ev.hit_when_reached) ? 1 : 0;
    }
    return finish(m, epsilon, side, trials, hits, ev.threshold, master_seed);
}

std::vector<std::uint64_t> conditional_returns(const SourceModel& model, std::span<const Symbol> block,
                                               std::size_t samples, std::uint64_t master_seed,
                                               std::uint64_t window)
{
    std::vector<std::uint64_t> out(samples, 0);
    const std::vector<Symbol> present(block.begin(), block.end());
    for (std::size_t i = 0; i < samples; ++i) {
        auto past = generate_past_given_block(model, block, window, derive_seed(master_seed, i));
        std::vector<Symbol> newest_first(past.rbegin(), past.rend());
        const auto real = Realization::from_parts(std::move(newest_first), present, model.alphabet_size());
        const auto r = recurrence_naive(real, block.size(), window);
        out[i] = r.found() ? r.r() : 0;
    }
    return out;
}

}  // namespace reference

}  // namespace recur
