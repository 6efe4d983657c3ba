#include "recur/realization.hpp"

#include <algorithm>
#include <string>

#include "recur/error.hpp"

namespace recur {

namespace {

void check_symbols(std::span<const Symbol> data, int alphabet_size)
{
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i] >= alphabet_size) {
            throw Error(ErrorKind::Validation, "data[" + std::to_string(i) + "]: symbol " +
                                                   std::to_string(data[i]) + " outside alphabet of size " +
                                                   std::to_string(alphabet_size));
        }
    }
}

}  // namespace

Realization::Realization(std::span<const Symbol> data, std::size_t origin, int alphabet_size)
    : alphabet_size_(alphabet_size)
{
    if (alphabet_size < 1 || alphabet_size > kMaxAlphabet)
        throw Error(ErrorKind::Validation, "alphabet_size: must lie in [1, 256]");
    if (origin >= data.size()) {
        throw Error(ErrorKind::Validation, "origin: " + std::to_string(origin) + " outside data of length " +
                                               std::to_string(data.size()));
    }
    check_symbols(data, alphabet_size);
    past_.assign(data.rend() - static_cast<std::ptrdiff_t>(origin + 1), data.rend());
    present_.assign(data.begin() + static_cast<std::ptrdiff_t>(origin + 1), data.end());
}

Realization Realization::from_parts(std::vector<Symbol> past_newest_first, std::vector<Symbol> present,
                                    int alphabet_size)
{
    check_symbols(past_newest_first, alphabet_size);
    check_symbols(present, alphabet_size);
    Realization r;
    r.past_ = std::move(past_newest_first);
    r.present_ = std::move(present);
    r.alphabet_size_ = alphabet_size;
    return r;
}

std::vector<Symbol> Realization::to_array() const
{
    std::vector<Symbol> out(past_.rbegin(), past_.rend());
    out.insert(out.end(), present_.begin(), present_.end());
    return out;
}

StreamingPath::StreamingPath(const SourceModel& model, std::size_t present_length, std::uint64_t seed)
    : sampler_(model, seed), present_(present_length), alphabet_size_(model.alphabet_size())
{
    if (present_length == 0) throw Error(ErrorKind::Validation, "present_length: must be at least 1");
    sampler_.draw_present(present_);
}

StreamingPath::StreamingPath(const SourceModel& model, std::span<const Symbol> present, std::uint64_t seed)
    : sampler_(model, seed), present_(present.begin(), present.end()), alphabet_size_(model.alphabet_size())
{
    if (present.empty()) throw Error(ErrorKind::Validation, "block: must be nonempty");
    check_symbols(present, alphabet_size_);
    // A constant source conditions trivially: its past is the symbol again.
    const bool constant_block =
        model.kind() == SourceKind::Constant &&
        std::all_of(present.begin(), present.end(), [&](Symbol s) { return s == model.constant_symbol(); });
    if (!model.supports_conditioning() && !constant_block)
        throw Error(ErrorKind::ModelUnsupported, "conditional past sampling needs an iid or markov model");
    sampler_.anchor(present_[0]);
}

Realization StreamingPath::materialize() const
{
    return Realization::from_parts(past_, present_, alphabet_size_);
}

Realization generate_realization(const SourceModel& model, std::size_t past_length, std::size_t present_length,
                                 std::uint64_t seed)
{
    StreamingPath path(model, present_length, seed);
    path.reserve_past(past_length);
    if (past_length > 0) path.past(past_length - 1);
    return path.materialize();
}

}  // namespace recur
