#include "bitlattice/micro_models.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "bitlattice/error.hpp"
#include "bitlattice/parallel.hpp"

namespace bitlattice {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<double> node_probabilities(const PathProbabilityTable* probs, double p1, int steps) {
    if (probs) return conditional_up_probabilities(*probs, steps);
    return std::vector<double>(total_nodes(steps - 1), p1);
}

// Builds an additive tree where each child's increment is a function of the
// parent's stored state and the noise drawn on the child's step.
template <class Step>
StockTree additive_tree(double s0, const TimeGrid& grid, const PathProbabilityTable* probs, double p1,
                        double sigma_z, double root_state, Step step, const TreeLimits& limits) {
    check_steps(grid.steps(), limits);
    if (!(s0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "s0 must be positive");
    const int steps = grid.steps();
    const auto p = node_probabilities(probs, p1, steps);
    std::vector<double> values(total_nodes(steps));
    std::vector<double> state(total_nodes(steps));
    values[0] = s0;
    state[0] = root_state;
    for (int n = 0; n < steps; ++n) {
        const std::size_t off = stage_offset(n);
        const std::size_t child_off = stage_offset(n + 1);
        parallel_for(stage_size(n), [&](std::size_t i) {
            try {
                const BwnPair z = bwn_values(p[off + i], sigma_z);
                for (int b = 0; b < 2; ++b) {
                    const double zb = b ? z.up : z.down;
                    const auto [increment, next_state] = step(state[off + i], zb);
                    const double v = values[off + i] + increment;
                    if (!(v > 0.0)) {
                        throw Error(ErrorCode::NegativePrice, "price " + std::to_string(v) + " <= 0 after increment");
                    }
                    values[child_off + 2 * i + b] = v;
                    state[child_off + 2 * i + b] = next_state;
                }
            } catch (...) {
                rethrow_at_node(PathKey(i, n));
            }
        });
    }
    return StockTree(grid, std::move(values), p, {}, ReturnKind::Additive);
}

void check_stationary(double phi) {
    if (!(std::fabs(phi) < 1.0)) {
        throw Error(ErrorCode::NonStationary, "|phi| = " + std::to_string(std::fabs(phi)) + " >= 1");
    }
}

}  // namespace

BwnPair bwn_values(double p1, double sigma_z) {
    if (!(p1 > 0.0 && p1 < 1.0)) {
        throw Error(ErrorCode::DegenerateProbability, "p1 = " + std::to_string(p1) + " is outside (0,1)");
    }
    if (!(sigma_z >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_z must be >= 0");
    return {sigma_z * std::sqrt((1.0 - p1) / p1), -sigma_z * std::sqrt(p1 / (1.0 - p1))};
}

MA1Model ma1_from_autocovariances(double c, double gamma0, double gamma1, double p1) {
    if (!(gamma0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "variance must be positive");
    MA1Model m;
    m.c = c;
    m.noise.p1 = p1;
    if (gamma1 == 0.0) {
        m.theta = 0.0;
        m.noise.sigma_z = std::sqrt(gamma0);
    } else {
        const double disc = gamma0 * gamma0 - 4.0 * gamma1 * gamma1;
        if (disc < 0.0) {
            throw Error(ErrorCode::NoRealRoot, "lag-1 autocorrelation " + std::to_string(gamma1 / gamma0) +
                                                   " exceeds 0.5 in magnitude; MA(1) cannot fit");
        }
        m.theta = (gamma0 - std::sqrt(disc)) / (2.0 * gamma1);
        m.noise.sigma_z = std::sqrt(gamma1 / m.theta);
    }
    bwn_values(p1, m.noise.sigma_z);
    return m;
}

MA1Model estimate_ma1(const DifferenceSeries& diffs, std::optional<double> p1) {
    const auto& x = diffs.values;
    if (x.size() < kMinMa1Samples) {
        throw Error(ErrorCode::TooShort, "MA(1) fit needs at least " + std::to_string(kMinMa1Samples) +
                                             " differences, got " + std::to_string(x.size()));
    }
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double g0 = 0.0, g1 = 0.0;
    std::size_t ups = 0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        g0 += (x[t] - mean) * (x[t] - mean);
        if (t + 1 < x.size()) g1 += (x[t] - mean) * (x[t + 1] - mean);
        if (x[t] > 0.0) ++ups;
    }
    return ma1_from_autocovariances(mean, g0 / n, g1 / n, p1.value_or(static_cast<double>(ups) / n));
}

MA1Moments ma1_moments(const MA1Model& model) {
    const double s2 = model.noise.sigma_z * model.noise.sigma_z;
    return {model.c, (1.0 + model.theta * model.theta) * s2, model.theta * s2};
}

AR1Moments ar1_moments(const AR1Model& model, int n, int k) {
    check_stationary(model.phi);
    if (n < 0 || k < 0 || k > n) throw Error(ErrorCode::InvalidArgument, "need 0 <= k <= n");
    const double phi = model.phi;
    const double s2 = model.noise.sigma_z * model.noise.sigma_z;
    double geometric = 0.0;
    for (int j = 0; j <= n; ++j) geometric += std::pow(phi, j);
    AR1Moments out;
    out.mean = model.c * geometric + model.s0 * std::pow(phi, n);
    out.variance = s2 * (1.0 - std::pow(phi, 2 * (n + 1))) / (1.0 - phi * phi);
    out.covariance = s2 * std::pow(phi, n - k) * (1.0 - std::pow(phi, 2 * k)) / (1.0 - phi * phi);
    return out;
}

double AR1LimitMoments::covariance(int n, int k) const { return std::pow(phi, std::abs(n - k)) * variance; }

AR1LimitMoments ar1_limit_moments(const AR1Model& model) {
    check_stationary(model.phi);
    const double s2 = model.noise.sigma_z * model.noise.sigma_z;
    return {model.c / (1.0 - model.phi), s2 / (1.0 - model.phi * model.phi), model.phi};
}

StockTree increment_tree(const MA1Model& model, double s0, const TimeGrid& grid, const PathProbabilityTable* probs,
                         TreeLimits limits) {
    // state = noise drawn on the step into the node
    auto step = [&model](double z_prev, double z) { return std::pair{model.c + model.theta * z_prev + z, z}; };
    return additive_tree(s0, grid, probs, model.noise.p1, model.noise.sigma_z, 0.0, step, limits);
}

StockTree increment_tree(const AR1Model& model, double s0, const TimeGrid& grid, const PathProbabilityTable* probs,
                         TreeLimits limits) {
    check_stationary(model.phi);
    // state = increment on the step into the node
    auto step = [&model](double ds_prev, double z) {
        const double ds = model.c + model.phi * ds_prev + z;
        return std::pair{ds, ds};
    };
    return additive_tree(s0, grid, probs, model.noise.p1, model.noise.sigma_z, model.s0, step, limits);
}

DifferenceSeries simulate_ma1_differences(const MA1Model& model, std::size_t steps, std::uint64_t seed) {
    const BwnPair z = model.noise.values();
    std::mt19937_64 rng(seed);
    auto draw = [&] { return uniform01(rng) < model.noise.p1 ? z.up : z.down; };
    DifferenceSeries out;
    out.values.reserve(steps);
    double prev = draw();
    for (std::size_t t = 0; t < steps; ++t) {
        const double cur = draw();
        out.values.push_back(model.c + model.theta * prev + cur);
        prev = cur;
    }
    return out;
}

ContaminatedPath simulate_contaminated_logprices(const DriftFn& mu_fn, const DriftFn& sigma_fn,
                                                 const MAqNoiseSpec& noise, std::size_t steps, double dt, double s0,
                                                 std::uint64_t seed) {
    if (steps < 1) throw Error(ErrorCode::InvalidArgument, "steps must be >= 1");
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
    if (!(s0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "s0 must be positive");
    if (noise.coefficients.empty() || noise.coefficients.front() != 1.0) {
        throw Error(ErrorCode::InvalidArgument, "noise coefficients must start with 1");
    }
    if (!(noise.innovation_std >= 0.0)) throw Error(ErrorCode::InvalidArgument, "innovation std must be >= 0");

    std::seed_seq path_seed{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 1U};
    std::seed_seq noise_seed{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 2U};
    std::mt19937_64 path_rng(path_seed);
    std::mt19937_64 noise_rng(noise_seed);
    std::normal_distribution<double> gauss;

    ContaminatedPath out;
    out.efficient_log.resize(steps + 1);
    out.efficient_log[0] = std::log(s0);
    const double sqrt_dt = std::sqrt(dt);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double l = out.efficient_log[k];
        out.efficient_log[k + 1] = l + mu_fn(t, l) * dt + sigma_fn(t, l) * sqrt_dt * gauss(path_rng);
    }

    const std::size_t q = noise.coefficients.size() - 1;
    std::vector<double> eta(steps + 1 + q);
    for (double& e : eta) e = noise.innovation_std * gauss(noise_rng);
    out.noise.resize(steps + 1);
    for (std::size_t n = 0; n <= steps; ++n) {
        double eps = 0.0;
        for (std::size_t j = 0; j <= q; ++j) eps += noise.coefficients[j] * eta[n + q - j];
        out.noise[n] = eps;
    }

    using namespace std::chrono;
    const sys_days start = year{2000} / January / 1;
    std::vector<PriceObservation> rows(steps + 1);
    for (std::size_t n = 0; n <= steps; ++n) {
        rows[n].date = year_month_day{start + days{static_cast<long>(n)}};
        rows[n].close = std::exp(out.efficient_log[n] + out.noise[n]);
    }
    out.observed = PriceSeries(std::move(rows));
    return out;
}

nlohmann::json to_json(const MA1Model& model) {
    return {{"kind", "ma1"}, {"c", model.c}, {"theta", model.theta}, {"sigma_z", model.noise.sigma_z},
            {"p1", model.noise.p1}};
}

nlohmann::json to_json(const AR1Model& model) {
    return {{"kind", "ar1"}, {"c", model.c}, {"phi", model.phi}, {"sigma_z", model.noise.sigma_z},
            {"p1", model.noise.p1}, {"s0", model.s0}};
}

MA1Model ma1_from_json(const nlohmann::json& j) {
    try {
        if (j.at("kind").get<std::string>() != "ma1") throw Error(ErrorCode::InvalidArgument, "model kind is not ma1");
        MA1Model m;
        m.c = j.at("c").get<double>();
        m.theta = j.at("theta").get<double>();
        m.noise.sigma_z = j.at("sigma_z").get<double>();
        m.noise.p1 = j.at("p1").get<double>();
        bwn_values(m.noise.p1, m.noise.sigma_z);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed ma1 model JSON: ") + e.what());
    }
}

AR1Model ar1_from_json(const nlohmann::json& j) {
    try {
        if (j.at("kind").get<std::string>() != "ar1") throw Error(ErrorCode::InvalidArgument, "model kind is not ar1");
        AR1Model m;
        m.c = j.at("c").get<double>();
        m.phi = j.at("phi").get<double>();
        m.noise.sigma_z = j.at("sigma_z").get<double>();
        m.noise.p1 = j.at("p1").get<double>();
        m.s0 = j.value("s0", 0.0);
        check_stationary(m.phi);
        bwn_values(m.noise.p1, m.noise.sigma_z);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed ar1 model JSON: ") + e.what());
    }
}

}  // namespace bitlattice
