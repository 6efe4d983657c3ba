#include "recur/sources.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "recur/error.hpp"

namespace recur {

namespace {

std::vector<double> cumulative(std::span<const double> row)
{
    std::vector<double> cdf(row.size());
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        acc += row[i];
        cdf[i] = acc;
        if (row[i] > 0.0) last = i;
    }
    for (std::size_t i = last; i < cdf.size(); ++i) cdf[i] = 2.0;
    return cdf;
}

std::string fmt_double(double x)
{
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

void validate_distribution(std::span<const double> p, const std::string& name, bool require_positive)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i]) || p[i] < 0.0) {
            throw Error(ErrorKind::Validation,
                        name + "[" + std::to_string(i) + "]: invalid probability " + fmt_double(p[i]));
        }
        if (require_positive && p[i] == 0.0) {
            throw Error(ErrorKind::Validation,
                        name + "[" + std::to_string(i) +
                            "]: zero-probability symbol; remove it from the alphabet");
        }
        sum += p[i];
    }
    if (std::abs(sum - 1.0) > kStochasticTolerance) {
        throw Error(ErrorKind::Validation,
                    name + ": entries sum to " + fmt_double(sum) + " (expected 1 within 1e-12)");
    }
}

// reach[i][j]: j reachable from i through positive entries (including i itself).
std::vector<std::vector<char>> reachability(const TransitionMatrix& P)
{
    const std::size_t n = P.size();
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (std::size_t s = 0; s < n; ++s) {
        std::queue<std::size_t> q;
        q.push(s);
        reach[s][s] = 1;
        while (!q.empty()) {
            auto u = q.front();
            q.pop();
            for (std::size_t v = 0; v < n; ++v) {
                if (P[u][v] > 0.0 && !reach[s][v]) {
                    reach[s][v] = 1;
                    q.push(v);
                }
            }
        }
    }
    return reach;
}

std::size_t closed_class_count(const TransitionMatrix& P)
{
    const std::size_t n = P.size();
    auto reach = reachability(P);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool closed = true;
        bool representative = true;
        for (std::size_t j = 0; j < n; ++j) {
            if (reach[i][j] && !reach[j][i]) closed = false;
            if (j < i && reach[i][j] && reach[j][i]) representative = false;
        }
        if (closed && representative) ++count;
    }
    return count;
}

std::vector<double> direct_stationary(const TransitionMatrix& P)
{
    const auto n = static_cast<Eigen::Index>(P.size());
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            A(i, j) = P[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] - (i == j ? 1.0 : 0.0);
    A.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::VectorXd x = A.fullPivLu().solve(b);
    return {x.data(), x.data() + n};
}

double stationary_residual(const TransitionMatrix& P, std::span<const double> pi)
{
    double worst = 0.0;
    for (std::size_t j = 0; j < P.size(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < P.size(); ++i) acc += pi[i] * P[i][j];
        worst = std::max(worst, std::abs(acc - pi[j]));
    }
    return worst;
}

}  // namespace

std::string_view to_string(SourceKind kind)
{
    switch (kind) {
    case SourceKind::Iid: return "iid";
    case SourceKind::Markov: return "markov";
    case SourceKind::Constant: return "constant";
    case SourceKind::Periodic: return "periodic";
    }
    return "unknown";
}

double EntropyRate::nats_per_symbol() const { return bits_per_symbol * std::log(2.0); }

// -- SourceModel --------------------------------------------------------------

SourceModel SourceModel::iid(std::vector<double> pmf)
{
    if (pmf.size() < 2 || pmf.size() > kMaxAlphabet) {
        throw Error(ErrorKind::Validation,
                    "pmf: alphabet size " + std::to_string(pmf.size()) + " outside [2, 256]");
    }
    validate_distribution(pmf, "pmf", true);
    SourceModel m;
    m.kind_ = SourceKind::Iid;
    m.size_ = static_cast<int>(pmf.size());
    m.marginal_ = std::move(pmf);
    m.forward_.reserve(m.marginal_.size() * m.marginal_.size());
    for (int i = 0; i < m.size_; ++i) m.forward_.insert(m.forward_.end(), m.marginal_.begin(), m.marginal_.end());
    m.backward_ = m.forward_;
    m.build_tables();
    return m;
}

SourceModel SourceModel::markov(const TransitionMatrix& transition)
{
    validate_transition(transition);
    SourceModel m;
    m.kind_ = SourceKind::Markov;
    m.size_ = static_cast<int>(transition.size());
    m.marginal_ = stationary_distribution(transition);
    const auto n = transition.size();
    m.forward_.resize(n * n);
    m.backward_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m.forward_[i * n + j] = transition[i][j];
    for (std::size_t i = 0; i < n; ++i) {
        if (m.marginal_[i] <= 0.0) {
            // Transient state: never visited by a stationary path.
            std::copy(m.marginal_.begin(), m.marginal_.end(), m.backward_.begin() + static_cast<std::ptrdiff_t>(i * n));
            continue;
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            m.backward_[i * n + j] = m.marginal_[j] * transition[j][i] / m.marginal_[i];
            sum += m.backward_[i * n + j];
        }
        for (std::size_t j = 0; j < n; ++j) m.backward_[i * n + j] /= sum;
    }
    m.build_tables();
    return m;
}

SourceModel SourceModel::constant(Symbol symbol, int alphabet_size)
{
    if (alphabet_size < 1 || alphabet_size > kMaxAlphabet || symbol >= alphabet_size) {
        throw Error(ErrorKind::Validation, "symbol: " + std::to_string(symbol) +
                                               " outside alphabet of size " + std::to_string(alphabet_size));
    }
    SourceModel m;
    m.kind_ = SourceKind::Constant;
    m.size_ = alphabet_size;
    m.constant_symbol_ = symbol;
    m.marginal_.assign(static_cast<std::size_t>(alphabet_size), 0.0);
    m.marginal_[symbol] = 1.0;
    return m;
}

SourceModel SourceModel::periodic(std::vector<Symbol> pattern)
{
    if (pattern.empty()) throw Error(ErrorKind::Validation, "pattern: must be nonempty");
    SourceModel m;
    m.kind_ = SourceKind::Periodic;
    m.size_ = std::max(2, *std::max_element(pattern.begin(), pattern.end()) + 1);
    m.marginal_.assign(static_cast<std::size_t>(m.size_), 0.0);
    for (auto s : pattern) m.marginal_[s] += 1.0 / static_cast<double>(pattern.size());
    m.pattern_ = std::move(pattern);
    return m;
}

SourceModel& SourceModel::set_id(std::string id)
{
    id_ = std::move(id);
    return *this;
}

double SourceModel::transition(int from, int to) const
{
    return forward_[static_cast<std::size_t>(from * size_ + to)];
}

std::span<const double> SourceModel::transition_row(int from) const
{
    return std::span<const double>(forward_).subspan(static_cast<std::size_t>(from * size_),
                                                     static_cast<std::size_t>(size_));
}

double SourceModel::reversed_transition(int from, int to) const
{
    return backward_[static_cast<std::size_t>(from * size_ + to)];
}

void SourceModel::build_tables()
{
    const auto n = static_cast<std::size_t>(size_);
    marginal_cdf_ = cumulative(marginal_);
    forward_cdf_.clear();
    backward_cdf_.clear();
    for (std::size_t i = 0; i < n; ++i) {
        auto f = cumulative(std::span<const double>(forward_).subspan(i * n, n));
        auto b = cumulative(std::span<const double>(backward_).subspan(i * n, n));
        forward_cdf_.insert(forward_cdf_.end(), f.begin(), f.end());
        backward_cdf_.insert(backward_cdf_.end(), b.begin(), b.end());
    }
}

// -- PathSampler ----------------------------------------------------------------

PathSampler::PathSampler(const SourceModel& model, std::uint64_t seed) : model_(&model), rng_(seed)
{
    if (model.kind() == SourceKind::Periodic) phase_ = rng_.next_u64() % model.pattern().size();
}

void PathSampler::draw_present(std::span<Symbol> out)
{
    const auto& m = *model_;
    switch (m.kind_) {
    case SourceKind::Constant:
        std::fill(out.begin(), out.end(), m.constant_symbol_);
        return;
    case SourceKind::Periodic: {
        const auto period = m.pattern_.size();
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = m.pattern_[(phase_ + k) % period];
        // x_0 sits one step before x_1 in the cycle.
        phase_ = (phase_ + period - 1) % period;
        return;
    }
    default: break;
    }
    if (out.empty()) return;
    const auto n = static_cast<std::size_t>(m.size_);
    Symbol x = static_cast<Symbol>(sample_cumulative(m.marginal_cdf_, rng_.uniform()));
    out[0] = x;
    for (std::size_t k = 1; k < out.size(); ++k) {
        std::span<const double> row(m.forward_cdf_.data() + x * n, n);
        x = static_cast<Symbol>(sample_cumulative(row, rng_.uniform()));
        out[k] = x;
    }
    last_ = out[0];
}

void PathSampler::anchor(Symbol first)
{
    if (model_->kind() == SourceKind::Periodic) {
        const auto period = model_->pattern_.size();
        phase_ = (phase_ + period - 1) % period;
    }
    last_ = first;
}

Symbol PathSampler::next_past()
{
    const auto& m = *model_;
    switch (m.kind_) {
    case SourceKind::Constant: return m.constant_symbol_;
    case SourceKind::Periodic: {
        const auto period = m.pattern_.size();
        Symbol s = m.pattern_[phase_];
        phase_ = (phase_ + period - 1) % period;
        return s;
    }
    default: break;
    }
    const auto n = static_cast<std::size_t>(m.size_);
    std::span<const double> row(m.backward_cdf_.data() + last_ * n, n);
    last_ = static_cast<Symbol>(sample_cumulative(row, rng_.uniform()));
    return last_;
}

// -- chain analysis -------------------------------------------------------------

void validate_transition(const TransitionMatrix& P)
{
    const auto n = P.size();
    if (n < 2 || n > kMaxAlphabet) {
        throw Error(ErrorKind::Validation,
                    "transition: " + std::to_string(n) + " states outside [2, 256]");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::string row = "transition[" + std::to_string(i) + "]";
        if (P[i].size() != n) {
            throw Error(ErrorKind::Validation, row + ": has " + std::to_string(P[i].size()) +
                                                   " entries, expected " + std::to_string(n));
        }
        validate_distribution(P[i], row, false);
    }
}

ChainClassification classify_chain(const TransitionMatrix& P)
{
    validate_transition(P);
    const auto n = P.size();
    auto reach = reachability(P);

    ChainClassification out;
    out.irreducible = true;
    for (std::size_t j = 0; j < n && out.irreducible; ++j)
        if (!reach[0][j] || !reach[j][0]) out.irreducible = false;

    // BFS levels from state 0; the period of its class is the gcd of
    // level[u] + 1 - level[v] over edges inside the class.
    std::vector<long> level(n, -1);
    std::queue<std::size_t> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
        auto u = q.front();
        q.pop();
        for (std::size_t v = 0; v < n; ++v) {
            if (P[u][v] > 0.0 && level[v] < 0) {
                level[v] = level[u] + 1;
                q.push(v);
            }
        }
    }
    long g = 0;
    for (std::size_t u = 0; u < n; ++u) {
        if (!(reach[0][u] && reach[u][0])) continue;
        for (std::size_t v = 0; v < n; ++v) {
            if (P[u][v] > 0.0 && reach[0][v] && reach[v][0]) g = std::gcd(g, std::labs(level[u] + 1 - level[v]));
        }
    }
    out.period = g == 0 ? 1 : static_cast<int>(g);
    out.aperiodic = out.period == 1;
    return out;
}

std::vector<double> power_iteration_stationary(const TransitionMatrix& P, double tolerance,
                                               std::size_t max_iterations)
{
    const auto n = P.size();
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    for (std::size_t it = 0; it < max_iterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (pi[i] == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) next[j] += pi[i] * P[i][j];
        }
        double delta = 0.0;
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] = 0.5 * (next[j] + pi[j]);
            sum += next[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
            next[j] /= sum;
            delta = std::max(delta, std::abs(next[j] - pi[j]));
        }
        pi.swap(next);
        if (delta <= tolerance) break;
    }
    return pi;
}

std::vector<double> stationary_distribution(const TransitionMatrix& P)
{
    validate_transition(P);
    auto classes = closed_class_count(P);
    if (classes != 1) {
        throw Error(ErrorKind::NotIrreducible,
                    "transition: chain has " + std::to_string(classes) +
                        " closed communicating classes; stationary distribution is not unique");
    }
    auto pi = P.size() <= 64 ? direct_stationary(P) : power_iteration_stationary(P);
    double sum = 0.0;
    for (auto& x : pi) {
        if (x < 0.0) x = 0.0;
        sum += x;
    }
    for (auto& x : pi) x /= sum;
    if (auto r = stationary_residual(P, pi); r > kStationaryResidual) {
        throw Error(ErrorKind::NotIrreducible, "transition: stationary solve residual " + fmt_double(r) +
                                                   " exceeds 1e-10");
    }
    return pi;
}

// -- model operations -------------------------------------------------------------

EntropyRate entropy_rate(const SourceModel& model)
{
    double h = 0.0;
    const int n = model.alphabet_size();
    switch (model.kind()) {
    case SourceKind::Iid:
        for (double p : model.marginal()) h -= p * std::log2(p);
        break;
    case SourceKind::Markov:
        for (int i = 0; i < n; ++i) {
            double row = 0.0;
            for (double p : model.transition_row(i))
                if (p > 0.0) row -= p * std::log2(p);
            h += model.marginal()[static_cast<std::size_t>(i)] * row;
        }
        break;
    case SourceKind::Constant:
    case SourceKind::Periodic:
        break;
    }
    return EntropyRate{std::max(0.0, h)};
}

std::vector<Symbol> generate(const SourceModel& model, std::size_t length, std::uint64_t seed)
{
    if (length == 0) throw Error(ErrorKind::Validation, "length: must be at least 1");
    std::vector<Symbol> out(length);
    PathSampler sampler(model, seed);
    sampler.draw_present(out);
    return out;
}

std::vector<Symbol> generate_past_given_block(const SourceModel& model, std::span<const Symbol> block,
                                              std::size_t past_length, std::uint64_t seed)
{
    if (!model.supports_conditioning()) {
        throw Error(ErrorKind::ModelUnsupported,
                    std::string("conditional past sampling needs an iid or markov model, got ") +
                        std::string(to_string(model.kind())));
    }
    if (block.empty()) throw Error(ErrorKind::Validation, "block: must be nonempty");
    for (std::size_t i = 0; i < block.size(); ++i) {
        if (block[i] >= model.alphabet_size())
            throw Error(ErrorKind::Validation, "block[" + std::to_string(i) + "]: symbol outside alphabet");
    }
    PathSampler sampler(model, seed);
    sampler.anchor(block[0]);
    std::vector<Symbol> past(past_length);
    for (std::size_t k = 0; k < past_length; ++k) past[past_length - 1 - k] = sampler.next_past();
    return past;
}

BlockProbability block_probability(const SourceModel& model, std::span<const Symbol> block)
{
    if (block.empty()) throw Error(ErrorKind::Validation, "block: must be nonempty");
    auto zero = [](std::size_t i) {
        return Error(ErrorKind::ZeroProbability,
                     "block: factor at position " + std::to_string(i) + " has probability 0");
    };
    for (std::size_t i = 0; i < block.size(); ++i) {
        if (block[i] >= model.alphabet_size()) throw zero(i);
    }
    double log2p = 0.0;
    switch (model.kind()) {
    case SourceKind::Iid:
        for (auto s : block) log2p += std::log2(model.marginal()[s]);
        break;
    case SourceKind::Markov: {
        double p0 = model.marginal()[block[0]];
        if (p0 <= 0.0) throw zero(0);
        log2p = std::log2(p0);
        for (std::size_t i = 1; i < block.size(); ++i) {
            double p = model.transition(block[i - 1], block[i]);
            if (p <= 0.0) throw zero(i);
            log2p += std::log2(p);
        }
        break;
    }
    case SourceKind::Constant:
        for (std::size_t i = 0; i < block.size(); ++i)
            if (block[i] != model.constant_symbol()) throw zero(i);
        break;
    case SourceKind::Periodic: {
        const auto pat = model.pattern();
        std::size_t hits = 0;
        for (std::size_t phase = 0; phase < pat.size(); ++phase) {
            bool ok = true;
            for (std::size_t i = 0; i < block.size() && ok; ++i) ok = pat[(phase + i) % pat.size()] == block[i];
            hits += ok ? 1 : 0;
        }
        if (hits == 0) throw zero(0);
        log2p = std::log2(static_cast<double>(hits) / static_cast<double>(pat.size()));
        break;
    }
    }
    return BlockProbability{std::exp2(log2p), log2p};
}

}  // namespace recur
