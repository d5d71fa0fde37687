#pragma once

namespace bitlattice {

/// Standard normal CDF via Hart's double-precision rational approximation
/// (algorithm 5666, as arranged by G. West, "Better approximations to
/// cumulative normal functions", 2005). Absolute error below 1e-14 on the
/// real line; coefficients are fixed here so results are reproducible
/// across platforms and libm versions.
double normal_cdf(double x);

double normal_pdf(double x);

}  // namespace bitlattice
