#include "recur/stats.hpp"

#include <algorithm>
#include <cmath>

#include "recur/error.hpp"

namespace recur {

Interval wilson_interval(std::uint64_t hits, std::uint64_t trials, double z)
{
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    Interval out{std::max(0.0, center - half), std::min(1.0, center + half)};
    out.low = std::min(out.low, p);
    out.high = std::max(out.high, p);
    if (hits == 0) out.low = 0.0;
    if (hits == trials) out.high = 1.0;
    return out;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw Error(ErrorKind::InsufficientPoints, "least squares needs at least two paired points");
    const double k = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw Error(ErrorKind::InsufficientPoints, "least squares needs distinct x values");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += e * e;
    }
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

MeanStd mean_sd(std::span<const double> values)
{
    MeanStd out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return out;
}

double ks_exponential_lattice(std::span<const std::uint64_t> sorted_r, std::size_t total, double p,
                              std::uint64_t window)
{
    if (total == 0) return 0.0;
    const double inv = 1.0 / static_cast<double>(total);
    auto model_cdf = [p](std::uint64_t r) { return -std::expm1(-static_cast<double>(r) * p); };
    double worst = 0.0;
    std::size_t below = 0;  // draws with R < current lattice point
    std::size_t i = 0;
    std::uint64_t prev = 0;
    while (i < sorted_r.size()) {
        const auto r = sorted_r[i];
        // Empirical CDF is flat on [prev, r - 1]; the gap is largest at r - 1.
        if (r > prev + 1) worst = std::max(worst, std::abs(static_cast<double>(below) * inv - model_cdf(r - 1)));
        while (i < sorted_r.size() && sorted_r[i] == r) ++i;
        below = i;
        worst = std::max(worst, std::abs(static_cast<double>(below) * inv - model_cdf(r)));
        prev = r;
    }
    if (window > prev) worst = std::max(worst, std::abs(static_cast<double>(below) * inv - model_cdf(window)));
    return worst;
}

}  // namespace recur
