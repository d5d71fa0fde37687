#pragma once

#include <functional>
#include <optional>

#include "bitlattice/pricing.hpp"

namespace bitlattice {

struct Instrument {
    double spot = 100.0;
    double strike = 100.0;
    double rate = 0.0;  // continuously compounded, per year
    double expiry = 1.0;
    OptionKind kind = OptionKind::Call;
    ExerciseStyle style = ExerciseStyle::European;
};

using VolPricer = std::function<double(const Instrument&, double sigma)>;

struct TreePricerConfig {
    int steps = 10;
    double p_up = 0.5;
    // Physical log-drift of the modified tree; unset means sigma^2 (1-p)/(2p),
    // which puts the conditional log mean at 0.
    std::optional<double> nu;
    QMethod q_method = QMethod::Replication;
};

/// Modified log-return tree on a uniform grid, discounting each step with the
/// simple rate equivalent to the continuous rate.
double tree_option_price(const Instrument& inst, double sigma, const TreePricerConfig& config);

VolPricer bsm_pricer();
VolPricer tree_pricer(TreePricerConfig config);

struct ImpliedVolOptions {
    double lo = 1e-6;
    double hi = 5.0;
    double tolerance = 1e-8;
    int max_iterations = 200;
};

/// Bisection on sigma. TargetOutOfRange when the target is outside the
/// no-arbitrage bounds or not bracketed by [lo, hi]. The lower end doubles
/// while the pricer reports ArbitrageViolation.
double implied_vol(double target, const VolPricer& pricer, const Instrument& inst, ImpliedVolOptions options = {});

}  // namespace bitlattice
