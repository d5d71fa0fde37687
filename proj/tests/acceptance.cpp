// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bitlattice/cli.hpp"
#include "bitlattice/error.hpp"
#include "bitlattice/fixture.hpp"
#include "bitlattice/implied_vol.hpp"
#include "bitlattice/micro_models.hpp"
#include "bitlattice/path_stats.hpp"
#include "bitlattice/pricing.hpp"
#include "bitlattice/tree_engine.hpp"

using namespace bitlattice;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

// Discounted call payoff against the lognormal terminal law, Simpson's rule
// in the standard normal variable above the exercise point.
double call_by_integration(double s, double k, double r, double sigma, double t) {
    const double vol = sigma * std::sqrt(t);
    const double a = (std::log(k / s) - (r - 0.5 * sigma * sigma) * t) / vol, b = std::max(a, 0.0) + 12.0;
    const int n = 20000;
    const double h = (b - a) / n;
    const double pi = std::acos(-1.0);
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double z = a + i * h;
        const double st = s * std::exp((r - 0.5 * sigma * sigma) * t + vol * z);
        const double w = i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * (st - k) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * pi);
    }
    return std::exp(-r * t) * acc * h / 3.0;
}

MomentSurface random_surface(std::mt19937_64& rng, int steps, double mu_lo, double mu_hi, double sig_lo,
                             double sig_hi) {
    std::uniform_real_distribution<double> mu(mu_lo, mu_hi), sig(sig_lo, sig_hi);
    std::vector<NodeMoments> m(total_nodes(steps - 1));
    for (auto& x : m) x = {mu(rng), sig(rng)};
    return MomentSurface([m](const PathKey& k) { return m[stage_offset(k.length()) + k.index()]; });
}

OptionSpec make_spec(ExerciseStyle style, Payoff payoff) {
    OptionSpec s;
    s.style = style;
    s.payoff = std::move(payoff);
    return s;
}

Outcome moment_matching() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> mu(-0.1, 0.3), sig(0.05, 0.6), p(0.05, 0.95), dt(1.0 / 252.0, 1.0);
    double worst = 0.0;
    int accepted = 0, rejected = 0;
    while (accepted < 1000) {
        const double m = mu(rng), s = sig(rng), q = p(rng), d = dt(rng);
        Multipliers k;
        try {
            k = up_down_multipliers(m, s, q, d);
        } catch (const Error& e) {
            // s_d <= 0 is outside the model; those draws are redrawn
            if (e.code() != ErrorCode::NegativePrice) throw;
            ++rejected;
            continue;
        }
        const double ru = k.up - 1.0, rd = k.down - 1.0;
        const double mean = q * ru + (1.0 - q) * rd;
        const double var = q * (ru - mean) * (ru - mean) + (1.0 - q) * (rd - mean) * (rd - mean);
        worst = std::max({worst, std::fabs(mean - m * d), std::fabs(var - s * s * d)});
        ++accepted;
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && secs < 1.0,
            fmt("max abs error %.2e over 1000 draws (%g redrawn with s_d <= 0), %.3f s", worst, rejected, secs)};
}

Outcome martingale() {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> p(0.2, 0.8), rate(0.0, 0.5);
    const int steps = 10;
    const double dt = 1.0 / 12.0;
    double worst = 0.0;
    std::size_t nodes = 0, violations = 0, mismatches = 0, pricer_mismatches = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto surface = random_surface(rng, steps, -0.1, 0.3, 0.05, 0.6);
        const auto tree = build_stock_tree(1.0, TimeGrid::uniform(steps * dt, steps), surface, p(rng));
        const double r = rate(rng);
        bool any_violation = false;
        for (int n = 0; n < steps; ++n) {
            for (std::size_t i = 0; i < stage_size(n); ++i) {
                ++nodes;
                const double s = tree.value(n, i), su = tree.value(n + 1, 2 * i + 1), sd = tree.value(n + 1, 2 * i);
                const bool bracket = sd / s < 1.0 + r * dt && 1.0 + r * dt < su / s;
                bool threw = false;
                try {
                    const double q = node_risk_neutral_q(tree, n, i, r, QMethod::Replication);
                    worst = std::max(worst, std::fabs((q * su + (1.0 - q) * sd) / (1.0 + r * dt) - s));
                } catch (const Error& e) {
                    threw = e.code() == ErrorCode::ArbitrageViolation;
                }
                if (threw) ++violations;
                if (threw == bracket) ++mismatches;
                any_violation = any_violation || !bracket;
            }
        }
        bool pricer_threw = false;
        try {
            price_european(tree, RateSurface::constant(r), make_spec(ExerciseStyle::European, Payoff::call(1.0)));
        } catch (const Error& e) {
            pricer_threw = e.code() == ErrorCode::ArbitrageViolation;
        }
        if (pricer_threw != any_violation) ++pricer_mismatches;
    }
    const bool ok = worst <= 1e-12 && mismatches == 0 && pricer_mismatches == 0 && violations > 0 &&
                    violations < nodes;
    return {ok, fmt("max |E_q[S']/(1+r dt) - S| = %.2e; %g of %g nodes outside the bracket, %g flag mismatches",
                    worst, static_cast<double>(violations), static_cast<double>(nodes),
                    static_cast<double>(mismatches + pricer_mismatches))};
}

Outcome bsm_convergence() {
    const auto t0 = Clock::now();
    Instrument inst{100, 100, 0.05, 1.0, OptionKind::Call, ExerciseStyle::European};
    const double ref = call_by_integration(100, 100, 0.05, 0.2, 1.0);
    std::vector<double> errs;
    for (int n : {4, 8, 12, 16}) {
        TreePricerConfig cfg;
        cfg.steps = n;
        errs.push_back(std::fabs(tree_option_price(inst, 0.2, cfg) - ref) / ref);
    }
    const double secs = seconds_since(t0);
    bool ok = errs[1] < 0.05 && errs[3] < 0.02 && secs < 5.0 && std::fabs(ref - 10.4506) < 1e-4;
    for (std::size_t i = 1; i < errs.size(); ++i) ok = ok && errs[i] < errs[i - 1];
    return {ok, fmt("oracle %.6f; rel err N=4 %.4f, N=8 %.4f, N=16 %.4f", ref, errs[0], errs[1], errs[3]) +
                    fmt(", %.2f s", secs)};
}

Outcome q_form_consistency() {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> nu(-0.1, 0.3), sig(0.05, 0.6), rate(0.0, 0.1), dt(1.0 / 252.0, 1.0 / 12.0);
    double lo = INFINITY, hi = 0.0;
    int bad = 0;
    auto gap = [](double v, double s, double r, double d) {
        const auto tree = modified_log_return_tree(1.0, v, s, 0.5, TimeGrid::uniform(d, 1));
        const double r_inst = simple_equivalent_rate(r, d);
        return std::fabs(node_risk_neutral_q(tree, 0, 0, r_inst, QMethod::Replication) -
                         node_risk_neutral_q(tree, 0, 0, r_inst, QMethod::ThetaForm));
    };
    for (int k = 0; k < 200; ++k) {
        const double v = nu(rng), s = sig(rng), r = rate(rng), d = dt(rng);
        const double ratio = gap(v, s, r, d) / gap(v, s, r, d / 2.0);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        if (!(ratio >= 1.5 && ratio <= 3.0)) ++bad;
    }
    return {bad == 0, fmt("gap ratio range [%.3f, %.3f] over 200 nodes, %g outside [1.5, 3]", lo, hi, bad)};
}

Outcome american_properties() {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> p(0.3, 0.7);
    double min_gap = INFINITY, call_diff = 0.0;
    const double dt = 1.0 / 12.0;
    for (int trial = 0; trial < 30; ++trial) {
        const double r = 0.01 * (trial % 6);
        // drifts at or above r keep every node inside the bracket
        const auto surface = random_surface(rng, 10, r, r + 0.1, 0.1, 0.5);
        const auto tree = build_stock_tree(1.0, TimeGrid::uniform(10 * dt, 10), surface, p(rng));
        const auto rates = RateSurface::constant(r);
        PricingOptions keep;
        keep.keep_nodes = true;
        for (const auto& pay : {Payoff::put(1.0), Payoff::put(1.2), Payoff::call(0.9), Payoff::call(1.1)}) {
            const auto eu = price_european(tree, rates, make_spec(ExerciseStyle::European, pay), keep);
            const auto am =
                price_american(tree, rates, make_spec(ExerciseStyle::American, pay), ExerciseSource::MarketValue, keep);
            for (std::size_t i = 0; i < eu.node_values.size(); ++i) {
                min_gap = std::min(min_gap, am.node_values[i] - eu.node_values[i]);
            }
            if (pay.kind() == OptionKind::Call) call_diff = std::max(call_diff, std::fabs(am.value - eu.value));
        }
    }
    const StockTree one(TimeGrid::uniform(1.0, 1), {100.0, 85.0, 125.0}, {0.5}, {}, ReturnKind::Simple);
    const auto rates = RateSurface::constant(0.05);
    const double deep =
        price_american(one, rates, make_spec(ExerciseStyle::American, Payoff::put(150)), ExerciseSource::MarketValue)
            .value;
    const double near =
        price_american(one, rates, make_spec(ExerciseStyle::American, Payoff::put(110)), ExerciseSource::MarketValue)
            .value;
    const bool ok = min_gap >= 0.0 && call_diff <= 1e-10 && std::fabs(deep - 50.0) <= 1e-9 &&
                    std::fabs(near - 12.5 / 1.05) <= 1e-9;
    return {ok, fmt("min(Amer - Euro) %.2e, max call diff %.2e, puts %.9f and %.9f", min_gap, call_diff, deep, near)};
}

Outcome ma1_roundtrip() {
    const auto t0 = Clock::now();
    const MA1Model truth{0.0, 0.5, {0.5, 1.0}};
    int passes = 0;
    double worst_theta = 0.0, worst_var = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto fit = estimate_ma1(simulate_ma1_differences(truth, 100000, seed));
        const double dt = std::fabs(fit.theta - 0.5);
        const double dv = std::fabs(fit.noise.sigma_z * fit.noise.sigma_z - 1.0);
        worst_theta = std::max(worst_theta, dt);
        worst_var = std::max(worst_var, dv);
        if (dt <= 0.05 && dv <= 0.05) ++passes;
    }
    const double secs = seconds_since(t0);
    return {passes >= 19 && secs < 5.0,
            fmt("%g/20 seeds pass; worst |theta err| %.4f, |sigma_z^2 err| %.4f, %.2f s", passes, worst_theta,
                worst_var, secs)};
}

SignSequence coin(std::mt19937_64& rng, double p, std::size_t n) {
    std::bernoulli_distribution d(p);
    SignSequence s;
    s.bits.resize(n);
    for (auto& b : s.bits) b = d(rng) ? 1 : 0;
    return s;
}

Outcome path_estimator() {
    std::mt19937_64 rng(707);
    const auto product = PathProbabilityTable::independent(2, 0.55);
    double worst = 0.0;
    for (int run = 0; run < 20; ++run) {
        const auto t = estimate_path_probabilities(coin(rng, 0.55, 10000), 2);
        for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::fabs(t.joint()[i] - product.joint()[i]));
    }
    std::size_t high = 0, low = 0, tests = 0;
    for (int run = 0; run < 500; ++run) {
        const auto report = uniform_z_test(estimate_path_probabilities(coin(rng, 0.5, 10000), 2), 0.05);
        for (const auto& e : report.entries) {
            high += e.flag_high;
            low += e.flag_low;
            ++tests;
        }
    }
    const double fh = static_cast<double>(high) / tests, fl = static_cast<double>(low) / tests;
    const bool ok = worst <= 0.03 && fh >= 0.02 && fh <= 0.09 && fl >= 0.02 && fl <= 0.09;
    return {ok, fmt("max joint deviation %.4f; null flag rate high %.4f, low %.4f", worst, fh, fl)};
}

Outcome implied_vol_roundtrip() {
    double bsm_err = 0.0, tree_err = 0.0;
    TreePricerConfig cfg;
    cfg.steps = 10;
    const auto tree = tree_pricer(cfg);
    for (double strike : {80.0, 95.0, 100.0, 110.0, 125.0}) {
        for (auto kind : {OptionKind::Call, OptionKind::Put}) {
            const Instrument inst{100.0, strike, 0.03, 0.75, kind, ExerciseStyle::European};
            const double bsm_target = bsm_price(100.0, strike, 0.03, 0.25, 0.75, kind);
            bsm_err = std::max(bsm_err, std::fabs(implied_vol(bsm_target, bsm_pricer(), inst) - 0.25));
            tree_err = std::max(tree_err, std::fabs(implied_vol(tree(inst, 0.3), tree, inst) - 0.3));
        }
    }
    return {bsm_err <= 1e-6 && tree_err <= 1e-4, fmt("max |sigma err| BSM %.2e, tree N=10 %.2e", bsm_err, tree_err)};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

Outcome fixture_end_to_end() {
    const fs::path dir = fs::temp_directory_path() / "bitlattice_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string prices = std::string(FIXTURE_DIR) + "/synthetic_prices.csv";
    const std::string chain = std::string(FIXTURE_DIR) + "/synthetic_chain.csv";
    std::ostringstream out, err;
    std::string why;

    const int est = cli::run({"estimate-probs", "--input", prices, "--horizon", std::to_string(fixture::kHorizon),
                              "--ztest", "0.05", "--output", (dir / "table.json").string(), "--ztest-output",
                              (dir / "ztest.csv").string()},
                             out, err);
    if (est != 0) return {false, "estimate-probs exited " + std::to_string(est) + ": " + err.str()};

    const auto table = nlohmann::json::parse(std::ifstream(dir / "table.json"));
    const auto gen = fixture::path_probabilities();
    const std::size_t paths = gen.size();
    double total = 0.0;
    bool schema = table.at("horizon") == fixture::kHorizon && table.at("joint").size() == paths;
    for (const auto& [bits, v] : table.at("joint").items()) total += v.get<double>();
    schema = schema && std::fabs(total - 1.0) < 1e-9;

    const auto z = read_csv(dir / "ztest.csv");
    const std::vector<std::string> z_header{"path_index", "path_bits", "estimate", "z_stat", "p_value",
                                            "p_value_upper", "p_value_lower", "flag_high", "flag_low",
                                            "null_probability", "upper_bound", "lower_bound"};
    schema = schema && z.size() == paths + 1 && z[0] == z_header;
    std::set<std::string> flagged, expected;
    const double p0 = 1.0 / static_cast<double>(paths);
    const double se = std::sqrt(p0 * (1.0 - p0) / static_cast<double>(fixture::kWindows));
    for (std::size_t i = 0; i < paths; ++i) {
        if (std::fabs(gen[i] - p0) >= 3.0 * se) expected.insert(PathKey(i, fixture::kHorizon).to_string());
    }
    for (std::size_t r = 1; r < z.size(); ++r) {
        if (z[r].size() != z_header.size()) {
            schema = false;
            continue;
        }
        if (z[r][7] == "1" || z[r][8] == "1") flagged.insert(z[r][1]);
    }

    const int iv = cli::run({"implied-vol", "--chain", chain, "--spot", std::to_string(fixture::kSpot), "--rate",
                             std::to_string(fixture::kRate), "--output", (dir / "iv.csv").string(), "--summary",
                             (dir / "iv.json").string()},
                            out, err);
    if (iv != 0) return {false, "implied-vol exited " + std::to_string(iv) + ": " + err.str()};
    const auto ivc = read_csv(dir / "iv.csv");
    const std::vector<std::string> iv_header{"expiry_years", "strike", "kind", "market_price", "implied_vol", "status"};
    bool iv_ok = !ivc.empty() && ivc[0] == iv_header && ivc.size() == read_csv(chain).size();
    std::size_t solved = 0;
    for (std::size_t r = 1; r < ivc.size(); ++r) {
        iv_ok = iv_ok && ivc[r].size() == iv_header.size();
        if (ivc[r].size() == iv_header.size() && ivc[r][5] == "ok") ++solved;
    }
    const auto summary = nlohmann::json::parse(std::ifstream(dir / "iv.json"));
    iv_ok = iv_ok && summary.contains("mean_implied_vol") && summary.contains("flat_vol_mad") &&
            summary.at("solved") == solved && solved > 0;
    fs::remove_all(dir);

    std::string names;
    for (const auto& f : flagged) names += (names.empty() ? "" : " ") + f;
    const bool ok = schema && iv_ok && !expected.empty() && flagged == expected;
    return {ok, "flagged {" + names + "} " + (flagged == expected ? "matches" : "differs from") +
                    " the >= 3 SE set; schemas " + (schema && iv_ok ? "valid" : "INVALID") + "; " +
                    std::to_string(solved) + "/" + std::to_string(ivc.size() - 1) + " chain rows inverted"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
        {"moment matching of up/down multipliers", moment_matching},
        {"martingale property and arbitrage bracket", martingale},
        {"modified tree converges to the closed form", bsm_convergence},
        {"replication and theta-form q agree to first order", q_form_consistency},
        {"American option properties", american_properties},
        {"MA(1) estimation roundtrip", ma1_roundtrip},
        {"path-probability estimator and z-test", path_estimator},
        {"implied volatility inversion", implied_vol_roundtrip},
        {"end-to-end CLI on the synthetic fixture", fixture_end_to_end},
    };
    int failures = 0;
    for (std::size_t k = 0; k < checks.size(); ++k) {
        Outcome o;
        try {
            o = checks[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("[%s] %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, checks[k].first.c_str(), o.detail.c_str());
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(checks.size()) - failures, checks.size());
    return failures == 0 ? 0 : 1;
}
