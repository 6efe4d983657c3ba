#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "recur/rng.hpp"

namespace recur {

using Symbol = std::uint8_t;
using TransitionMatrix = std::vector<std::vector<double>>;

inline constexpr int kMaxAlphabet = 256;
inline constexpr double kStochasticTolerance = 1e-12;
inline constexpr double kStationaryResidual = 1e-10;

enum class SourceKind { Iid, Markov, Constant, Periodic };

std::string_view to_string(SourceKind kind);

struct ChainClassification {
    bool irreducible = false;
    bool aperiodic = false;
    int period = 1;
};

/// Entropy rate in bits per symbol.
struct EntropyRate {
    double bits_per_symbol = 0.0;

    double nats_per_symbol() const;
};

struct BlockProbability {
    double probability = 0.0;
    double log2_probability = 0.0;
};

/// Finite-alphabet stationary source. Immutable after construction, so one
/// model can be shared freely between threads.
///
/// Constant and Periodic exist for tests: they are the zero-entropy sources
/// whose recurrence times are known in closed form.
class SourceModel {
public:
    static SourceModel iid(std::vector<double> pmf);
    static SourceModel markov(const TransitionMatrix& transition);
    static SourceModel constant(Symbol symbol, int alphabet_size = 1);
    static SourceModel periodic(std::vector<Symbol> pattern);

    SourceKind kind() const { return kind_; }
    int alphabet_size() const { return size_; }

    // Distribution of a single symbol under stationarity: the pmf for IID,
    // pi for Markov, pattern frequencies for Periodic.
    std::span<const double> marginal() const { return marginal_; }

    // IID rows repeat the pmf so both kinds share the same sampling path.
    double transition(int from, int to) const;
    std::span<const double> transition_row(int from) const;
    double reversed_transition(int from, int to) const;

    Symbol constant_symbol() const { return constant_symbol_; }
    std::span<const Symbol> pattern() const { return pattern_; }

    const std::string& id() const { return id_; }
    SourceModel& set_id(std::string id);

    bool supports_conditioning() const
    {
        return kind_ == SourceKind::Iid || kind_ == SourceKind::Markov;
    }

private:
    friend class PathSampler;

    SourceModel() = default;
    void build_tables();

    SourceKind kind_ = SourceKind::Iid;
    int size_ = 0;
    std::string id_;
    std::vector<double> marginal_;
    std::vector<double> forward_;   // size x size, row-major
    std::vector<double> backward_;  // time-reversed kernel
    std::vector<double> marginal_cdf_;
    std::vector<double> forward_cdf_;
    std::vector<double> backward_cdf_;
    Symbol constant_symbol_ = 0;
    std::vector<Symbol> pattern_;
};

/// Draws one stationary path: the present x_1, x_2, ... forward, then the
/// past x_0, x_{-1}, ... backward through the reversed kernel. The order of
/// engine draws is fixed, so a path is a pure function of (model, seed) and
/// the past can be extended lazily without changing what was drawn before.
class PathSampler {
public:
    PathSampler(const SourceModel& model, std::uint64_t seed);

    void draw_present(std::span<Symbol> out);

    /// Condition the backward walk on x_1 = first; replaces draw_present when
    /// the present block is given rather than sampled.
    void anchor(Symbol first);

    Symbol next_past();

private:
    const SourceModel* model_;
    Rng rng_;
    Symbol last_ = 0;
    std::size_t phase_ = 0;  // periodic: pattern index of the next past symbol
};

// -- chain analysis ---------------------------------------------------------

void validate_transition(const TransitionMatrix& transition);

ChainClassification classify_chain(const TransitionMatrix& transition);

/// Unique stationary vector. Direct solve for up to 64 states, power
/// iteration on the lazy chain above that.
std::vector<double> stationary_distribution(const TransitionMatrix& transition);

/// Power iteration from the uniform vector on the lazy chain (P + I) / 2,
/// which has the same fixed point as P and does not oscillate on periodic
/// chains.
std::vector<double> power_iteration_stationary(const TransitionMatrix& transition,
                                               double tolerance = 1e-12,
                                               std::size_t max_iterations = 10'000'000);

// -- model operations -------------------------------------------------------

EntropyRate entropy_rate(const SourceModel& model);

std::vector<Symbol> generate(const SourceModel& model, std::size_t length, std::uint64_t seed);

/// Past of length `past_length` drawn from the stationary law conditioned on
/// X_1^n = block. Returned oldest first, so the last element is x_0.
std::vector<Symbol> generate_past_given_block(const SourceModel& model,
                                              std::span<const Symbol> block,
                                              std::size_t past_length,
                                              std::uint64_t seed);

/// Exact stationary probability of `block`, accumulated in log space.
/// Throws ZeroProbability if any factor vanishes.
BlockProbability block_probability(const SourceModel& model, std::span<const Symbol> block);

}  // namespace recur
