#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace recur {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
    double low = 0.0;
    double high = 1.0;
};

/// Wilson score interval for a binomial proportion. Stays inside [0, 1] and
/// behaves at zero hits, where the Wald interval collapses.
Interval wilson_interval(std::uint64_t hits, std::uint64_t trials, double z = kZ95);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

struct MeanStd {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation, 0 for fewer than 2 values
};

MeanStd mean_sd(std::span<const double> values);

/// Kolmogorov-Smirnov distance between the law of U = R * p and the unit
/// exponential, for integer R observed on the lattice {1, ..., window}.
///
/// `sorted_r` holds the resolved values in ascending order; `total` also
/// counts censored draws (R > window), which contribute mass beyond the
/// grid. The comparison is P(R <= r) against 1 - exp(-r p) at every lattice
/// point r <= window.
double ks_exponential_lattice(std::span<const std::uint64_t> sorted_r, std::size_t total, double p,
                              std::uint64_t window);

}  // namespace recur
