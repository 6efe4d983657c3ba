#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace recur {

enum class ErrorKind {
    Validation,
    NotIrreducible,
    ZeroProbability,
    ModelUnsupported,
    InsufficientPast,
    InsufficientData,
    Undecidable,
    ThresholdTooLarge,
    EpsilonExceedsEntropy,
    TooLargeToEnumerate,
    InsufficientPoints,
    Degenerate,
    BlockZeroProbability,
    Io,
};

std::string_view to_string(ErrorKind kind);

// Guard errors are the ones that reject a well-formed request because of
// its size or because the requested event is undefined for the model.
bool is_runtime_guard(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace recur
