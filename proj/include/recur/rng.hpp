#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace recur {

// SplitMix64 finalizer. Used only to turn structured seeds into well-spread
// engine seeds; the stream generator itself is std::mt19937_64.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of the `index`-th independent stream under `master`.
///
/// Trials, samples and sweep points all draw their engine seed from this
/// function, so every result is a pure function of (master, index) no matter
/// how the work is split across threads.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return mix64(mix64(master) ^ (0xD1B54A32D192ED03ULL * (index + 1)));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

/// Index drawn from a cumulative table. The table's final positive-mass entry
/// is stored as 2.0 so a draw can never run past it.
inline int sample_cumulative(std::span<const double> cdf, double u) noexcept
{
    int i = 0;
    while (u >= cdf[static_cast<std::size_t>(i)]) ++i;
    return i;
}

}  // namespace recur
