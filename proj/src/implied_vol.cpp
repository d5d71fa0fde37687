#include "bitlattice/implied_vol.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bitlattice/error.hpp"

namespace bitlattice {

namespace {

void check_instrument(const Instrument& inst) {
    if (!(inst.spot > 0.0 && inst.strike > 0.0 && inst.expiry > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "spot, strike and expiry must be positive");
    }
    if (inst.kind == OptionKind::Custom) throw Error(ErrorCode::InvalidArgument, "instrument must be a call or put");
}

}  // namespace

double tree_option_price(const Instrument& inst, double sigma, const TreePricerConfig& config) {
    check_instrument(inst);
    const TimeGrid grid = TimeGrid::uniform(inst.expiry, config.steps);
    const double odds = (1.0 - config.p_up) / config.p_up;
    const double nu = config.nu.value_or(0.5 * sigma * sigma * odds);
    const StockTree tree = modified_log_return_tree(inst.spot, nu, sigma, config.p_up, grid);
    const RateSurface rates = RateSurface::constant(simple_equivalent_rate(inst.rate, grid.dt(0)));
    OptionSpec spec;
    spec.style = inst.style;
    spec.payoff = inst.kind == OptionKind::Call ? Payoff::call(inst.strike) : Payoff::put(inst.strike);
    PricingOptions options;
    options.q_method = config.q_method;
    if (inst.style == ExerciseStyle::European) return price_european(tree, rates, spec, options).value;
    return price_american(tree, rates, spec, ExerciseSource::MarketValue, options).value;
}

VolPricer bsm_pricer() {
    return [](const Instrument& inst, double sigma) {
        check_instrument(inst);
        if (inst.style == ExerciseStyle::American && inst.kind == OptionKind::Put) {
            throw Error(ErrorCode::InvalidArgument, "closed form does not price American puts; use the tree pricer");
        }
        return bsm_price(inst.spot, inst.strike, inst.rate, sigma, inst.expiry, inst.kind);
    };
}

VolPricer tree_pricer(TreePricerConfig config) {
    return [config](const Instrument& inst, double sigma) { return tree_option_price(inst, sigma, config); };
}

double implied_vol(double target, const VolPricer& pricer, const Instrument& inst, ImpliedVolOptions options) {
    check_instrument(inst);
    const double df = std::exp(-inst.rate * inst.expiry);
    const bool american = inst.style == ExerciseStyle::American;
    double lower = 0.0, upper = 0.0;
    if (inst.kind == OptionKind::Call) {
        lower = std::max(inst.spot - inst.strike * df, 0.0);
        upper = inst.spot;
    } else {
        lower = std::max((american ? inst.strike : inst.strike * df) - inst.spot, 0.0);
        upper = american ? inst.strike : inst.strike * df;
    }
    if (!(target > lower && target < upper)) {
        throw Error(ErrorCode::TargetOutOfRange, "target " + std::to_string(target) + " outside (" +
                                                     std::to_string(lower) + ", " + std::to_string(upper) + ")");
    }
    double lo = options.lo, hi = options.hi;
    // A tree has no arbitrage-free geometry below sigma ~ |r - mu| sqrt(dt);
    // move the lower end up until the pricer is defined there.
    double f_lo = 0.0;
    for (;;) {
        try {
            f_lo = pricer(inst, lo) - target;
            break;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ArbitrageViolation || 2.0 * lo >= hi) throw;
            lo *= 2.0;
        }
    }
    double f_hi = pricer(inst, hi) - target;
    if (std::fabs(f_lo) < options.tolerance) return lo;
    if (std::fabs(f_hi) < options.tolerance) return hi;
    if ((f_lo > 0.0) == (f_hi > 0.0)) {
        throw Error(ErrorCode::TargetOutOfRange, "target not bracketed by sigma in [" + std::to_string(lo) + ", " +
                                                     std::to_string(hi) + "]");
    }
    for (int it = 0; it < options.max_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = pricer(inst, mid) - target;
        if (std::fabs(f_mid) < options.tolerance) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    throw Error(ErrorCode::NoConvergence, "bisection did not reach tolerance in " +
                                              std::to_string(options.max_iterations) + " iterations");
}

}  // namespace bitlattice
