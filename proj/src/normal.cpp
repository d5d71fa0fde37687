#include "bitlattice/normal.hpp"

#include <cmath>
#include <numbers>

namespace bitlattice {

double normal_cdf(double x) {
    const double ax = std::fabs(x);
    double tail = 0.0;
    if (ax <= 37.0) {
        const double e = std::exp(-ax * ax / 2.0);
        if (ax < 7.07106781186547) {
            double num = 3.52624965998911e-02 * ax + 0.700383064443688;
            num = num * ax + 6.37396220353165;
            num = num * ax + 33.912866078383;
            num = num * ax + 112.079291497871;
            num = num * ax + 221.213596169931;
            num = num * ax + 220.206867912376;
            double den = 8.83883476483184e-02 * ax + 1.75566716318264;
            den = den * ax + 16.064177579207;
            den = den * ax + 86.7807322029461;
            den = den * ax + 296.564248779674;
            den = den * ax + 637.333633378831;
            den = den * ax + 793.826512519948;
            den = den * ax + 440.413735824752;
            tail = e * num / den;
        } else {
            double cf = ax + 0.65;
            cf = ax + 4.0 / cf;
            cf = ax + 3.0 / cf;
            cf = ax + 2.0 / cf;
            cf = ax + 1.0 / cf;
            tail = e / cf / 2.506628274631;
        }
    }
    return x > 0.0 ? 1.0 - tail : tail;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace bitlattice
