#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "bitlattice/market_data.hpp"
#include "bitlattice/path_stats.hpp"
#include "bitlattice/tree_engine.hpp"

namespace bitlattice {

struct BwnPair {
    double up = 0.0;
    double down = 0.0;
};

/// Two-point noise with mean 0 and variance sigma_z^2.
BwnPair bwn_values(double p1, double sigma_z);

struct BinaryWhiteNoise {
    double p1 = 0.5;
    double sigma_z = 1.0;

    BwnPair values() const { return bwn_values(p1, sigma_z); }
};

// dS_n = c + theta z_{n-1} + z_n
struct MA1Model {
    double c = 0.0;
    double theta = 0.0;
    BinaryWhiteNoise noise;
};

// dS_n = c + phi dS_{n-1} + z_n, with dS_0 = s0
struct AR1Model {
    double c = 0.0;
    double phi = 0.0;
    BinaryWhiteNoise noise;
    double s0 = 0.0;
};

// eps_n = sum_j coefficients[j] * eta_{n-j}; coefficients[0] is 1.
struct MAqNoiseSpec {
    std::vector<double> coefficients{1.0};
    double innovation_std = 0.0;
};

inline constexpr std::size_t kMinMa1Samples = 30;

/// Solves gamma0 = (1 + theta^2) s2, gamma1 = theta s2 for the invertible root.
MA1Model ma1_from_autocovariances(double c, double gamma0, double gamma1, double p1);

/// Moment fit: c = mean, gamma with 1/n normalization. p1 defaults to the
/// fraction of strictly positive differences.
MA1Model estimate_ma1(const DifferenceSeries& diffs, std::optional<double> p1 = std::nullopt);

struct MA1Moments {
    double mean = 0.0;
    double variance = 0.0;
    double lag1_cov = 0.0;
};

MA1Moments ma1_moments(const MA1Model& model);

struct AR1Moments {
    double mean = 0.0;
    double variance = 0.0;
    double covariance = 0.0;  // cov(dS_k, dS_n)
};

AR1Moments ar1_moments(const AR1Model& model, int n, int k);

struct AR1LimitMoments {
    double mean = 0.0;
    double variance = 0.0;
    double phi = 0.0;

    double covariance(int n, int k) const;
};

AR1LimitMoments ar1_limit_moments(const AR1Model& model);

/// Additive increment trees. With a table, the BWN pair at each node uses the
/// node's conditional up-probability; otherwise the model's p1.
StockTree increment_tree(const MA1Model& model, double s0, const TimeGrid& grid,
                         const PathProbabilityTable* probs = nullptr, TreeLimits limits = {});
StockTree increment_tree(const AR1Model& model, double s0, const TimeGrid& grid,
                         const PathProbabilityTable* probs = nullptr, TreeLimits limits = {});

/// Draws `steps` MA(1) differences with BWN innovations.
DifferenceSeries simulate_ma1_differences(const MA1Model& model, std::size_t steps, std::uint64_t seed);

using DriftFn = std::function<double(double t, double log_price)>;

struct ContaminatedPath {
    PriceSeries observed;
    std::vector<double> efficient_log;  // L at t_0..t_n
    std::vector<double> noise;          // eps at t_0..t_n
};

/// Euler path of dL = mu dt + sigma dB plus MA(q) noise; observed price is
/// exp(L + eps). Dates are consecutive days from 2000-01-01.
ContaminatedPath simulate_contaminated_logprices(const DriftFn& mu_fn, const DriftFn& sigma_fn,
                                                 const MAqNoiseSpec& noise, std::size_t steps, double dt, double s0,
                                                 std::uint64_t seed);

nlohmann::json to_json(const MA1Model& model);
nlohmann::json to_json(const AR1Model& model);
MA1Model ma1_from_json(const nlohmann::json& j);
AR1Model ar1_from_json(const nlohmann::json& j);

}  // namespace bitlattice
