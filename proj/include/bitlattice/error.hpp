#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bitlattice {

enum class ErrorCode {
    MissingFile,
    MalformedRow,
    NonPositivePrice,
    NonMonotoneDates,
    TooShort,
    InvalidHorizon,
    InvalidArgument,
    ZeroPrefixMass,
    SampleTooSmall,
    DegenerateProbability,
    NegativePrice,
    HorizonMismatch,
    NoRealRoot,
    NonStationary,
    ArbitrageViolation,
    DegenerateSpread,
    TargetOutOfRange,
    NoConvergence,
    LengthMismatch,
    Empty,
};

std::string_view to_string(ErrorCode code);

// Computation errors arise from valid inputs that the model cannot handle
// (e.g. a node outside the no-arbitrage bracket); everything else is a
// validation failure of the inputs themselves.
bool is_computation_error(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    // Message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace bitlattice
