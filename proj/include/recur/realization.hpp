#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "recur/sources.hpp"

namespace recur {

/// A finite window onto one path of a source.
///
/// Positions are 1-based: x_1, x_2, ... is the present block and
/// the symbols after it, x_0, x_{-1}, ... is the past. The past is stored
/// newest first so it can be extended backwards in place.
class Realization {
public:
    Realization() = default;

    /// `data` in time order; data[origin] is x_0.
    Realization(std::span<const Symbol> data, std::size_t origin, int alphabet_size);

    static Realization from_parts(std::vector<Symbol> past_newest_first, std::vector<Symbol> present,
                                  int alphabet_size);

    Symbol at(std::int64_t position) const
    {
        return position >= 1 ? present_[static_cast<std::size_t>(position - 1)]
                             : past_[static_cast<std::size_t>(-position)];
    }

    std::size_t past_length() const { return past_.size(); }
    std::size_t future_length() const { return present_.size(); }
    std::size_t origin() const { return past_.size() - 1; }
    int alphabet_size() const { return alphabet_size_; }

    std::span<const Symbol> present() const { return present_; }
    std::span<const Symbol> past_newest_first() const { return past_; }

    /// Time-ordered copy; element origin() is x_0.
    std::vector<Symbol> to_array() const;

private:
    std::vector<Symbol> past_;
    std::vector<Symbol> present_;
    int alphabet_size_ = 2;
};

/// Present drawn first (forward from stationarity), then the past backwards.
/// Same draw order as the streaming kernels, so a materialized realization
/// and a lazily extended one agree symbol for symbol.
Realization generate_realization(const SourceModel& model, std::size_t past_length, std::size_t present_length,
                                 std::uint64_t seed);

/// Lazily extended past over a fixed present. The k-th past symbol is the
/// k-th backward draw whatever the access pattern.
class StreamingPath {
public:
    StreamingPath(const SourceModel& model, std::size_t present_length, std::uint64_t seed);

    /// Present given, past drawn conditionally on it.
    StreamingPath(const SourceModel& model, std::span<const Symbol> present, std::uint64_t seed);

    std::span<const Symbol> present() const { return present_; }
    int alphabet_size() const { return alphabet_size_; }

    /// x_{-k}.
    Symbol past(std::size_t k)
    {
        while (past_.size() <= k) past_.push_back(sampler_.next_past());
        return past_[k];
    }

    std::size_t past_generated() const { return past_.size(); }
    void reserve_past(std::size_t n) { past_.reserve(n); }

    Realization materialize() const;

private:
    PathSampler sampler_;
    std::vector<Symbol> present_;
    std::vector<Symbol> past_;
    int alphabet_size_;
};

}  // namespace recur
