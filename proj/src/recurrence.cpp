#include "recur/recurrence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>
#include <unordered_map>

#include "recur/error.hpp"

namespace recur {

namespace {

// Packs an n-block into one word when n * bits fits in 64; otherwise a
// polynomial hash that callers must confirm symbol by symbol.
class WindowCoder {
public:
    WindowCoder(std::size_t n, int alphabet_size) : n_(n)
    {
        bits_ = std::max(1, static_cast<int>(std::bit_width(static_cast<unsigned>(alphabet_size - 1))));
        exact_ = n * static_cast<std::size_t>(bits_) <= 64;
        if (exact_) {
            const auto width = n * static_cast<std::size_t>(bits_);
            mask_ = width == 64 ? ~0ULL : ((1ULL << width) - 1);
        } else {
            top_ = 1;
            for (std::size_t i = 1; i < n; ++i) top_ *= kBase;
        }
    }

    bool exact() const { return exact_; }

    // Code of x_s .. x_{s+n-1}.
    template <class Src>
    std::uint64_t code_at(Src& src, std::int64_t s) const
    {
        std::uint64_t c = 0;
        for (std::size_t i = n_; i-- > 0;) {
            const std::uint64_t x = src.sym(s + static_cast<std::int64_t>(i));
            c = exact_ ? (c << bits_) | x : c * kBase + (x + 1);
        }
        return c;
    }

    // Code of the window one step to the left.
    std::uint64_t step_left(std::uint64_t c, Symbol entering, Symbol leaving) const
    {
        if (exact_) return ((c << bits_) | entering) & mask_;
        return (static_cast<std::uint64_t>(entering) + 1) + kBase * (c - (static_cast<std::uint64_t>(leaving) + 1) * top_);
    }

private:
    static constexpr std::uint64_t kBase = 0x100000001B3ULL;

    std::size_t n_;
    int bits_ = 1;
    bool exact_ = true;
    std::uint64_t mask_ = ~0ULL;
    std::uint64_t top_ = 1;
};

struct MaterializedSrc {
    const Realization& real;
    Symbol sym(std::int64_t p) const { return real.at(p); }
};

struct ShiftedSrc {
    const Realization& real;
    std::int64_t shift;
    Symbol sym(std::int64_t p) const { return real.at(p + shift); }
};

struct StreamingSrc {
    StreamingPath& path;
    std::span<const Symbol> present;
    Symbol sym(std::int64_t p)
    {
        return p >= 1 ? present[static_cast<std::size_t>(p - 1)] : path.past(static_cast<std::size_t>(-p));
    }
};

template <class Src>
bool same_block(Src& src, std::int64_t a, std::int64_t b, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        if (src.sym(a + static_cast<std::int64_t>(i)) != src.sym(b + static_cast<std::int64_t>(i))) return false;
    return true;
}

// Smallest j in [1, limit] with x_{1-j}^{n-j} == x_1^n, or 0.
template <class Src>
std::uint64_t scan_first_return(Src& src, std::size_t n, std::uint64_t limit, int alphabet_size)
{
    if (limit == 0) return 0;
    WindowCoder coder(n, alphabet_size);
    const std::uint64_t target = coder.code_at(src, 1);
    std::uint64_t c = target;
    const auto ni = static_cast<std::int64_t>(n);
    if (coder.exact()) {
        for (std::uint64_t j = 1; j <= limit; ++j) {
            const auto s = 1 - static_cast<std::int64_t>(j);
            c = coder.step_left(c, src.sym(s), 0);
            if (c == target) return j;
        }
        return 0;
    }
    for (std::uint64_t j = 1; j <= limit; ++j) {
        const auto s = 1 - static_cast<std::int64_t>(j);
        c = coder.step_left(c, src.sym(s), src.sym(s + ni));
        if (c == target && same_block(src, s, 1, n)) return j;
    }
    return 0;
}

// One backward sweep serving many windows. Windows activate when the sweep
// reaches the position just left of their block and expire once the shift
// exceeds j_max; activation order equals expiry order, so a deque suffices.
template <class Src>
std::vector<RecurrenceOutcome> sweep_windows(Src& src, std::size_t n, std::span<const std::int64_t> starts,
                                             std::uint64_t j_max, int alphabet_size)
{
    std::vector<RecurrenceOutcome> out(starts.size(), RecurrenceOutcome{n, Censored{j_max}});
    if (starts.empty() || j_max == 0) return out;

    WindowCoder coder(n, alphabet_size);
    const auto ni = static_cast<std::int64_t>(n);
    const std::size_t count = starts.size();

    std::vector<std::uint64_t> block_code(count);
    for (std::size_t w = 0; w < count; ++w) block_code[w] = coder.code_at(src, starts[w]);

    // Bucket filter keyed on the top bits of a mixed code; a zero bucket
    // means no pending window can match.
    constexpr int kFilterBits = 16;
    std::vector<std::uint32_t> filter(std::size_t{1} << kFilterBits, 0);
    auto bucket = [](std::uint64_t c) { return static_cast<std::size_t>(mix64(c) >> (64 - kFilterBits)); };
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> pending;
    std::deque<std::size_t> active;
    std::vector<char> done(count, 0);

    const std::int64_t floor_s = starts.front() - static_cast<std::int64_t>(j_max);
    std::int64_t s = starts.back() - 1;
    std::size_t next = count;  // windows at indices >= next are active
    std::size_t remaining = count;
    std::uint64_t c = coder.code_at(src, s);

    auto retire = [&](std::size_t w) {
        auto& list = pending[block_code[w]];
        list.erase(std::find(list.begin(), list.end(), w));
        --filter[bucket(block_code[w])];
        done[w] = 1;
        --remaining;
    };

    while (true) {
        while (next > 0 && starts[next - 1] > s) {
            --next;
            pending[block_code[next]].push_back(next);
            ++filter[bucket(block_code[next])];
            active.push_back(next);
        }
        while (!active.empty()) {
            const auto w = active.front();
            if (done[w]) {
                active.pop_front();
            } else if (static_cast<std::uint64_t>(starts[w] - s) > j_max) {
                retire(w);  // stays Censored
                active.pop_front();
            } else {
                break;
            }
        }
        if (remaining == 0) break;

        if (filter[bucket(c)] != 0) {
            if (auto it = pending.find(c); it != pending.end() && !it->second.empty()) {
                auto candidates = it->second;
                for (auto w : candidates) {
                    if (!coder.exact() && !same_block(src, s, starts[w], n)) continue;
                    out[w].value = Found{static_cast<std::uint64_t>(starts[w] - s)};
                    retire(w);
                }
                if (remaining == 0) break;
            }
        }
        if (s <= floor_s) break;
        const Symbol entering = src.sym(s - 1);
        const Symbol leaving = coder.exact() ? Symbol{0} : src.sym(s - 1 + ni);
        c = coder.step_left(c, entering, leaving);
        --s;
    }
    return out;
}

template <class Src>
std::size_t scan_longest_match(Src& src, std::size_t future, std::size_t m, std::size_t stop_at)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k <= m; ++k) {
        const auto s = 1 - static_cast<std::int64_t>(k);
        std::size_t len = 0;
        while (len < future && src.sym(s + static_cast<std::int64_t>(len)) == src.sym(1 + static_cast<std::int64_t>(len)))
            ++len;
        best = std::max(best, len);
        if (best >= stop_at) break;
    }
    return best;
}

void require_block(const Realization& real, std::size_t n)
{
    if (n == 0) throw Error(ErrorKind::Validation, "n: block length must be at least 1");
    if (real.future_length() < n) {
        throw Error(ErrorKind::InsufficientData, "realization has " + std::to_string(real.future_length()) +
                                                     " present symbols, block length is " + std::to_string(n));
    }
}

void require_past(const Realization& real, std::uint64_t needed)
{
    if (real.past_length() < needed) {
        throw Error(ErrorKind::InsufficientPast, "past has " + std::to_string(real.past_length()) +
                                                     " symbols, " + std::to_string(needed) + " required");
    }
}

void check_starts(std::span<const std::int64_t> starts, std::size_t n, std::size_t future)
{
    for (std::size_t i = 0; i < starts.size(); ++i) {
        if (starts[i] < 1 || (i > 0 && starts[i] <= starts[i - 1]))
            throw Error(ErrorKind::Validation, "block_starts: must be strictly ascending and >= 1");
    }
    if (!starts.empty() && static_cast<std::size_t>(starts.back()) + n - 1 > future) {
        throw Error(ErrorKind::InsufficientData,
                    "block starting at " + std::to_string(starts.back()) + " runs past the present");
    }
}

}  // namespace

RecurrenceOutcome recurrence_naive(const Realization& real, std::size_t n, std::uint64_t j_max)
{
    require_block(real, n);
    require_past(real, j_max);
    for (std::uint64_t j = 1; j <= j_max; ++j) {
        const auto start = 1 - static_cast<std::int64_t>(j);
        bool match = true;
        for (std::size_t i = 0; i < n && match; ++i)
            match = real.at(start + static_cast<std::int64_t>(i)) == real.at(1 + static_cast<std::int64_t>(i));
        if (match) return {n, Found{j}};
    }
    return {n, Censored{j_max}};
}

RecurrenceOutcome recurrence_indexed(const Realization& real, std::size_t n, std::uint64_t j_max)
{
    require_block(real, n);
    require_past(real, j_max);
    MaterializedSrc src{real};
    const auto j = scan_first_return(src, n, j_max, real.alphabet_size());
    return j > 0 ? RecurrenceOutcome{n, Found{j}} : RecurrenceOutcome{n, Censored{j_max}};
}

std::vector<RecurrenceOutcome> recurrence_windows(const Realization& real, std::size_t n,
                                                  std::span<const std::int64_t> block_starts,
                                                  std::uint64_t j_max)
{
    require_block(real, n);
    check_starts(block_starts, n, real.future_length());
    if (!block_starts.empty()) {
        // The first window reaches furthest back relative to the origin.
        const auto reach = static_cast<std::int64_t>(j_max) - (block_starts.front() - 1);
        if (reach > 0) require_past(real, static_cast<std::uint64_t>(reach));
    }
    MaterializedSrc src{real};
    return sweep_windows(src, n, block_starts, j_max, real.alphabet_size());
}

std::vector<RecurrenceOutcome> recurrence_windows(StreamingPath& path, std::size_t n,
                                                  std::span<const std::int64_t> block_starts,
                                                  std::uint64_t j_max)
{
    if (n == 0) throw Error(ErrorKind::Validation, "n: block length must be at least 1");
    check_starts(block_starts, n, path.present().size());
    StreamingSrc src{path, path.present()};
    return sweep_windows(src, n, block_starts, j_max, path.alphabet_size());
}

bool exceeds_threshold(const Realization& real, std::size_t n, double t)
{
    require_block(real, n);
    if (!(t >= 0.0)) throw Error(ErrorKind::Validation, "t: threshold must be nonnegative");
    const auto needed = static_cast<std::uint64_t>(std::ceil(t)) + n;
    require_past(real, needed);
    const auto limit = static_cast<std::uint64_t>(std::floor(t));
    MaterializedSrc src{real};
    return scan_first_return(src, n, limit, real.alphabet_size()) == 0;
}

MatchLengthOutcome match_length(const Realization& real, std::size_t m)
{
    return match_length(real, m, 0);
}

MatchLengthOutcome match_length(const Realization& real, std::size_t m, std::size_t shift)
{
    if (shift > real.future_length())
        throw Error(ErrorKind::InsufficientData, "shift runs past the end of the realization");
    if (real.past_length() + shift < m) require_past(real, m - shift);
    ShiftedSrc src{real, static_cast<std::int64_t>(shift)};
    const auto future = real.future_length() - shift;
    const auto best = scan_longest_match(src, future, m, future == 0 ? 1 : future);
    if (best >= future) return {m, FutureLimited{best}};
    return {m, ExactLength{best}};
}

bool duality_holds(const Realization& real, std::size_t n, std::size_t m)
{
    if (n == 0) throw Error(ErrorKind::Validation, "n: block length must be at least 1");
    if (real.past_length() < m || real.future_length() < n) {
        throw Error(ErrorKind::Undecidable, "duality needs past >= m and future >= n");
    }
    const bool r_exceeds = !recurrence_indexed(real, n, m).found();
    const auto match = match_length(real, m);
    // A future-limited match has length >= future >= n.
    const bool l_short = match.exact() && match.length() < n;
    return r_exceeds == l_short;
}

bool returns_within(StreamingPath& path, std::size_t n, std::uint64_t limit)
{
    return first_return(path, n, limit).found();
}

RecurrenceOutcome first_return(StreamingPath& path, std::size_t n, std::uint64_t limit)
{
    if (n == 0 || path.present().size() < n)
        throw Error(ErrorKind::InsufficientData, "present shorter than the block length");
    StreamingSrc src{path, path.present()};
    const auto j = scan_first_return(src, n, limit, path.alphabet_size());
    return j > 0 ? RecurrenceOutcome{n, Found{j}} : RecurrenceOutcome{n, Censored{limit}};
}

std::size_t longest_match(StreamingPath& path, std::size_t m, std::size_t stop_at)
{
    StreamingSrc src{path, path.present()};
    return scan_longest_match(src, path.present().size(), m, stop_at);
}

}  // namespace recur
