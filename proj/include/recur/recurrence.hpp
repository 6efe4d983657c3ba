#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "recur/realization.hpp"

namespace recur {

struct Found {
    std::uint64_t r = 0;
    bool operator==(const Found&) const = default;
};

/// No match among the shifts 1..window.
struct Censored {
    std::uint64_t window = 0;
    bool operator==(const Censored&) const = default;
};

struct RecurrenceOutcome {
    std::size_t n = 0;
    std::variant<Found, Censored> value;

    bool found() const { return std::holds_alternative<Found>(value); }
    std::uint64_t r() const { return std::get<Found>(value).r; }
    bool operator==(const RecurrenceOutcome&) const = default;
};

struct ExactLength {
    std::size_t length = 0;
    bool operator==(const ExactLength&) const = default;
};

/// The best match was still extending when the future ran out; the true
/// match length is at least `length`.
struct FutureLimited {
    std::size_t length = 0;
    bool operator==(const FutureLimited&) const = default;
};

struct MatchLengthOutcome {
    std::size_t m = 0;
    std::variant<ExactLength, FutureLimited> value;

    bool exact() const { return std::holds_alternative<ExactLength>(value); }
    std::size_t length() const
    {
        return std::visit([](auto v) { return v.length; }, value);
    }
    bool operator==(const MatchLengthOutcome&) const = default;
};

/// Backward scan j = 1, 2, ..., j_max comparing x_{1-j}^{n-j} with x_1^n.
/// Candidate blocks may overlap the present block. Reference implementation.
RecurrenceOutcome recurrence_naive(const Realization& real, std::size_t n, std::uint64_t j_max);

/// Same contract as recurrence_naive; rolling window codes with exact
/// confirmation.
RecurrenceOutcome recurrence_indexed(const Realization& real, std::size_t n, std::uint64_t j_max);

/// Recurrence of every block x_b^{b+n-1} for b in `block_starts` (ascending,
/// each >= 1), all resolved in one backward sweep. Window b may use shifts up
/// to j_max and sees the whole realization before position b as its past.
std::vector<RecurrenceOutcome> recurrence_windows(const Realization& real, std::size_t n,
                                                  std::span<const std::int64_t> block_starts,
                                                  std::uint64_t j_max);

/// As above over a lazily drawn past.
std::vector<RecurrenceOutcome> recurrence_windows(StreamingPath& path, std::size_t n,
                                                  std::span<const std::int64_t> block_starts,
                                                  std::uint64_t j_max);

/// R_n > t, decided by scanning shifts up to floor(t) only. Needs a past of
/// at least ceil(t) + n symbols.
bool exceeds_threshold(const Realization& real, std::size_t n, double t);

/// L_m: longest prefix of x_1, x_2, ... that reappears starting at one of
/// the positions -m+1, ..., 0. Copies may run into the present.
MatchLengthOutcome match_length(const Realization& real, std::size_t m);

/// L_m of the shifted path T^shift x: the prefix starts at x_{shift+1} and
/// everything up to x_shift counts as past.
MatchLengthOutcome match_length(const Realization& real, std::size_t m, std::size_t shift);

/// Checks R_n > m <=> L_m < n on the realization. Throws Undecidable when the
/// realization is too short to evaluate either side.
bool duality_holds(const Realization& real, std::size_t n, std::size_t m);

// -- streaming trial kernels ---------------------------------------------------

/// Whether some shift j <= limit returns the block x_1^n. Past drawn lazily,
/// so the cost is the position of the first match (or `limit`).
bool returns_within(StreamingPath& path, std::size_t n, std::uint64_t limit);

/// First return of x_1^n scanning at most `limit` shifts.
RecurrenceOutcome first_return(StreamingPath& path, std::size_t n, std::uint64_t limit);

/// Longest match over k <= m, stopping early once `stop_at` is reached.
/// Returns the attained length capped at the present length.
std::size_t longest_match(StreamingPath& path, std::size_t m, std::size_t stop_at);

}  // namespace recur
