#include "bitlattice/error.hpp"

namespace bitlattice {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::MalformedRow: return "MalformedRow";
        case ErrorCode::NonPositivePrice: return "NonPositivePrice";
        case ErrorCode::NonMonotoneDates: return "NonMonotoneDates";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::InvalidHorizon: return "InvalidHorizon";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ZeroPrefixMass: return "ZeroPrefixMass";
        case ErrorCode::SampleTooSmall: return "SampleTooSmall";
        case ErrorCode::DegenerateProbability: return "DegenerateProbability";
        case ErrorCode::NegativePrice: return "NegativePrice";
        case ErrorCode::HorizonMismatch: return "HorizonMismatch";
        case ErrorCode::NoRealRoot: return "NoRealRoot";
        case ErrorCode::NonStationary: return "NonStationary";
        case ErrorCode::ArbitrageViolation: return "ArbitrageViolation";
        case ErrorCode::DegenerateSpread: return "DegenerateSpread";
        case ErrorCode::TargetOutOfRange: return "TargetOutOfRange";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::Empty: return "Empty";
    }
    return "Unknown";
}

bool is_computation_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::ArbitrageViolation:
        case ErrorCode::ZeroPrefixMass:
        case ErrorCode::NoRealRoot:
        case ErrorCode::NoConvergence:
        case ErrorCode::TargetOutOfRange:
        case ErrorCode::DegenerateSpread:
            return true;
        default:
            return false;
    }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace bitlattice
