#include "bitlattice/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <numeric>
#include <random>

#include "bitlattice/error.hpp"
#include "bitlattice/fixture.hpp"
#include "bitlattice/path_key.hpp"
#include "bitlattice/pricing.hpp"

namespace bitlattice {

SignSequence synthetic_signs(const std::vector<double>& path_probs, int horizon, std::size_t windows,
                             std::uint64_t seed) {
    if (horizon < 1 || horizon > 24) throw Error(ErrorCode::InvalidHorizon, "horizon out of range");
    if (path_probs.size() != stage_size(horizon)) throw Error(ErrorCode::LengthMismatch, "need 2^N path probabilities");
    if (windows == 0) throw Error(ErrorCode::InvalidArgument, "need at least one window");

    std::vector<std::size_t> counts(path_probs.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < path_probs.size(); ++i) {
        if (!(path_probs[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative path probability");
        const double exact = path_probs[i] * static_cast<double>(windows);
        counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        assigned += counts[i];
        remainders.emplace_back(exact - static_cast<double>(counts[i]), i);
    }
    if (assigned > windows) throw Error(ErrorCode::InvalidArgument, "path probabilities sum above 1");
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < windows; ++k, ++assigned) counts[remainders[k % remainders.size()].second]++;

    std::vector<std::uint64_t> order;
    order.reserve(windows);
    for (std::size_t i = 0; i < counts.size(); ++i) order.insert(order.end(), counts[i], i);
    std::mt19937_64 rng(seed);
    // Fisher-Yates with raw draws so the order does not depend on the library's distributions.
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng() % k]);

    SignSequence out;
    out.bits.reserve(windows * static_cast<std::size_t>(horizon));
    for (auto path : order) {
        for (int b = horizon - 1; b >= 0; --b) out.bits.push_back(static_cast<std::uint8_t>((path >> b) & 1U));
    }
    return out;
}

PriceSeries prices_from_signs(const SignSequence& signs, double s0, double up_return, double down_return) {
    if (!(s0 > 0.0) || !(up_return > 0.0) || !(down_return < 0.0 && down_return > -1.0)) {
        throw Error(ErrorCode::InvalidArgument, "need s0 > 0, up_return > 0, -1 < down_return < 0");
    }
    using namespace std::chrono;
    sys_days day = year{2000} / January / 3;
    std::vector<PriceObservation> rows;
    rows.reserve(signs.bits.size() + 1);
    double price = s0;
    auto push = [&] {
        rows.push_back({year_month_day{day}, price});
        do {
            day += days{1};
        } while (weekday{day} == Saturday || weekday{day} == Sunday);
    };
    push();
    for (auto bit : signs.bits) {
        price *= 1.0 + (bit ? up_return : down_return);
        push();
    }
    return PriceSeries(std::move(rows));
}

}  // namespace bitlattice

namespace bitlattice::fixture {

std::vector<double> path_probabilities() { return {0.17, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.08}; }

PriceSeries price_series() {
    return prices_from_signs(synthetic_signs(path_probabilities(), kHorizon, kWindows, kSeed), kSpot, 0.01, -0.0095);
}

void write_chain_csv(std::ostream& out) {
    out << "expiry_years,strike,kind,market_price\n" << std::setprecision(10);
    for (double t : {0.25, 0.5, 1.0}) {
        for (double k : {90.0, 95.0, 100.0, 105.0, 110.0}) {
            const double m = std::log(k / kSpot);
            const double vol = 0.22 - 0.1 * m + 0.5 * m * m;
            out << t << ',' << k << ",call," << bsm_price(kSpot, k, kRate, vol, t, OptionKind::Call) << '\n';
            out << t << ',' << k << ",put," << bsm_price(kSpot, k, kRate, vol, t, OptionKind::Put) << '\n';
        }
    }
}

}  // namespace bitlattice::fixture
