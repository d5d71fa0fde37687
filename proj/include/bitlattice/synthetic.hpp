#pragma once

#include <cstdint>
#include <vector>

#include "bitlattice/market_data.hpp"

namespace bitlattice {

/// V windows of length N whose path counts are exactly round(prob * V)
/// (largest remainders fill the gap), in seeded random order.
SignSequence synthetic_signs(const std::vector<double>& path_probs, int horizon, std::size_t windows,
                             std::uint64_t seed);

/// Prices starting at s0 on 2000-01-03, one business day per sign, moving by
/// up_return on a 1 and down_return on a 0.
PriceSeries prices_from_signs(const SignSequence& signs, double s0, double up_return, double down_return);

}  // namespace bitlattice
