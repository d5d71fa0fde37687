#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bitlattice/market_data.hpp"

// The synthetic data shipped under data/. Paths 000 and 111 are set well
// away from 1/8; the other six sit exactly on it.
namespace bitlattice::fixture {

inline constexpr int kHorizon = 3;
inline constexpr std::size_t kWindows = 1000;
inline constexpr std::uint64_t kSeed = 20240611;
inline constexpr double kSpot = 100.0;
inline constexpr double kRate = 0.03;

std::vector<double> path_probabilities();
PriceSeries price_series();
/// expiry_years,strike,kind,market_price from a closed-form smile.
void write_chain_csv(std::ostream& out);

}  // namespace bitlattice::fixture
