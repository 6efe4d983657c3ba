#include "recur/error.hpp"

namespace recur {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::NotIrreducible: return "NotIrreducible";
    case ErrorKind::ZeroProbability: return "ZeroProbability";
    case ErrorKind::ModelUnsupported: return "ModelUnsupported";
    case ErrorKind::InsufficientPast: return "InsufficientPast";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::Undecidable: return "Undecidable";
    case ErrorKind::ThresholdTooLarge: return "ThresholdTooLarge";
    case ErrorKind::EpsilonExceedsEntropy: return "EpsilonExceedsEntropy";
    case ErrorKind::TooLargeToEnumerate: return "TooLargeToEnumerate";
    case ErrorKind::InsufficientPoints: return "InsufficientPoints";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::BlockZeroProbability: return "BlockZeroProbability";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

bool is_runtime_guard(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::ThresholdTooLarge:
    case ErrorKind::TooLargeToEnumerate:
    case ErrorKind::EpsilonExceedsEntropy:
    case ErrorKind::InsufficientPast:
    case ErrorKind::InsufficientData:
    case ErrorKind::InsufficientPoints:
    case ErrorKind::Undecidable:
    case ErrorKind::Degenerate:
        return true;
    default:
        return false;
    }
}

}  // namespace recur
