#include "bitlattice/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "bitlattice/error.hpp"
#include "bitlattice/normal.hpp"
#include "bitlattice/parallel.hpp"

namespace bitlattice {

namespace {

std::string num(double x) {
    std::ostringstream s;
    s << std::setprecision(10) << x;
    return s.str();
}

std::string_view q_name(QMethod m) { return m == QMethod::Replication ? "replication" : "theta"; }

void check_expiry(const StockTree& stock, const OptionSpec& spec) {
    if (!spec.expiry) return;
    const double t = stock.grid().maturity();
    if (std::fabs(*spec.expiry - t) > 1e-9 * std::max(1.0, t)) {
        throw Error(ErrorCode::HorizonMismatch, "option expiry " + num(*spec.expiry) + " != tree maturity " + num(t));
    }
}

// Backward induction shared by the European, American and fair-holding
// recursions. `exercise` (flat, may be null) adds an early-exercise floor.
PriceReport induct(const StockTree& stock, const RateSurface& rates, const std::vector<double>& terminal,
                   const std::function<double(int, std::size_t)>* exercise, const PricingOptions& options) {
    const int steps = stock.steps();
    std::vector<double> next(terminal);
    std::vector<double> all;
    std::vector<double> deltas;
    if (options.keep_nodes) {
        all.resize(total_nodes(steps));
        deltas.resize(total_nodes(steps - 1));
        std::copy(next.begin(), next.end(), all.begin() + static_cast<std::ptrdiff_t>(stage_offset(steps)));
    }
    PriceReport report;
    for (int n = steps - 1; n >= 0; --n) {
        const double dt = stock.grid().dt(n);
        std::vector<double> cur(stage_size(n));
        std::vector<double> q_stage(n == 0 ? 1 : 0);
        parallel_for(cur.size(), [&](std::size_t i) {
            const PathKey key(i, n);
            try {
                const double r = rates.at(key);
                const double q = node_risk_neutral_q(stock, n, i, r, options.q_method);
                const double fd = next[2 * i];
                const double fu = next[2 * i + 1];
                double v = (q * fu + (1.0 - q) * fd) / (1.0 + r * dt);
                if (exercise) v = std::max(v, (*exercise)(n, i));
                cur[i] = v;
                if (n == 0) q_stage[0] = q;
                if (options.keep_nodes) {
                    deltas[stage_offset(n) + i] =
                        delta_position(fu, fd, stock.value(n + 1, 2 * i + 1), stock.value(n + 1, 2 * i));
                }
            } catch (...) {
                rethrow_at_node(key);
            }
        });
        if (options.keep_nodes) {
            std::copy(cur.begin(), cur.end(), all.begin() + static_cast<std::ptrdiff_t>(stage_offset(n)));
        }
        if (n == 0) {
            report.q_root = q_stage[0];
            const double su = stock.value(1, 1), sd = stock.value(1, 0);
            report.delta_root = su != sd ? delta_position(next[1], next[0], su, sd) : 0.0;
        }
        next = std::move(cur);
    }
    report.value = next[0];
    report.node_values = std::move(all);
    report.node_deltas = std::move(deltas);
    report.q_method = q_name(options.q_method);
    report.discounting = "1 + r_inst dt per step";
    return report;
}

std::vector<double> terminal_payoffs(const StockTree& stock, const Payoff& payoff) {
    const auto leaves = stock.stage(stock.steps());
    std::vector<double> out(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i) out[i] = payoff(leaves[i]);
    return out;
}

}  // namespace

Payoff Payoff::call(double strike) {
    if (!(strike > 0.0)) throw Error(ErrorCode::InvalidArgument, "strike must be positive, got " + num(strike));
    Payoff p;
    p.kind_ = OptionKind::Call;
    p.strike_ = strike;
    return p;
}

Payoff Payoff::put(double strike) {
    Payoff p = call(strike);
    p.kind_ = OptionKind::Put;
    return p;
}

Payoff Payoff::custom(std::function<double(double)> g) {
    if (!g) throw Error(ErrorCode::InvalidArgument, "custom payoff is empty");
    Payoff p;
    p.kind_ = OptionKind::Custom;
    p.g_ = std::move(g);
    return p;
}

double Payoff::operator()(double s) const {
    switch (kind_) {
        case OptionKind::Call: return std::max(s - strike_, 0.0);
        case OptionKind::Put: return std::max(strike_ - s, 0.0);
        case OptionKind::Custom: return g_(s);
    }
    return 0.0;
}

double risk_neutral_q_replication(double s_u, double s_d, double r_inst, double dt) {
    const double growth = 1.0 + r_inst * dt;
    if (!(s_d < growth && growth < s_u)) {
        throw Error(ErrorCode::ArbitrageViolation, "bracket s_d < 1 + r dt < s_u fails: s_d=" + num(s_d) +
                                                       " 1+r dt=" + num(growth) + " s_u=" + num(s_u));
    }
    return (growth - s_d) / (s_u - s_d);
}

double theta_market_price_of_risk(double mu, double r_inst, double sigma, double p_up) {
    if (!(p_up > 0.0 && p_up < 1.0)) {
        throw Error(ErrorCode::DegenerateProbability, "p_up = " + num(p_up) + " is outside (0,1)");
    }
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
    const double odds = (1.0 - p_up) / p_up;
    return (mu - r_inst + 0.5 * sigma * sigma * odds) / (sigma * std::sqrt(odds));
}

double risk_neutral_q_theta(double theta, double p_up, double dt) {
    const double q = p_up - (1.0 - p_up) * theta * std::sqrt(dt);
    if (!(q > 0.0 && q < 1.0)) {
        throw Error(ErrorCode::ArbitrageViolation, "theta-form q = " + num(q) + " outside (0,1); refine the grid");
    }
    return q;
}

double delta_position(double f_up, double f_down, double s_up, double s_down) {
    if (s_up == s_down) throw Error(ErrorCode::DegenerateSpread, "child prices are equal (" + num(s_up) + ")");
    return (f_up - f_down) / (s_up - s_down);
}

double node_risk_neutral_q(const StockTree& stock, int stage, std::size_t index, double r_inst, QMethod method) {
    const double dt = stock.grid().dt(stage);
    if (method == QMethod::Replication) {
        const double s = stock.value(stage, index);
        return risk_neutral_q_replication(stock.value(stage + 1, 2 * index + 1) / s,
                                          stock.value(stage + 1, 2 * index) / s, r_inst, dt);
    }
    if (!stock.has_moments()) throw Error(ErrorCode::InvalidArgument, "theta-form q needs per-node moments");
    const NodeMoments& m = stock.moments(stage, index);
    const double p = stock.up_prob(stage, index);
    // theta is stated with a continuously compounded rate
    const double r_cont = std::log1p(r_inst * dt) / dt;
    return risk_neutral_q_theta(theta_market_price_of_risk(m.mu, r_cont, m.sigma, p), p, dt);
}

PriceReport price_european(const StockTree& stock, const RateSurface& rates, const OptionSpec& spec,
                           PricingOptions options) {
    if (spec.style != ExerciseStyle::European) throw Error(ErrorCode::InvalidArgument, "option is not European");
    check_expiry(stock, spec);
    PriceReport r = induct(stock, rates, terminal_payoffs(stock, spec.payoff), nullptr, options);
    r.exercise = "european";
    return r;
}

PriceReport price_american(const StockTree& stock, const RateSurface& rates, const OptionSpec& spec,
                           ExerciseSource source, PricingOptions options) {
    if (spec.style != ExerciseStyle::American) throw Error(ErrorCode::InvalidArgument, "option is not American");
    check_expiry(stock, spec);
    std::optional<StockTree> fair;
    if (source == ExerciseSource::FairHolding) fair = fair_holding_stock_tree(stock, rates, options.q_method);
    const StockTree& ex_tree = fair ? *fair : stock;
    const std::function<double(int, std::size_t)> exercise = [&](int n, std::size_t i) {
        return spec.payoff(ex_tree.value(n, i));
    };
    PriceReport r = induct(stock, rates, terminal_payoffs(stock, spec.payoff), &exercise, options);
    r.exercise = source == ExerciseSource::MarketValue ? "american/market" : "american/fair-holding";
    return r;
}

StockTree fair_holding_stock_tree(const StockTree& stock, const RateSurface& rates, QMethod method) {
    const auto leaves = stock.stage(stock.steps());
    PricingOptions options;
    options.q_method = method;
    options.keep_nodes = true;
    PriceReport r = induct(stock, rates, std::vector<double>(leaves.begin(), leaves.end()), nullptr, options);
    return StockTree(stock.grid(), std::move(r.node_values), stock.up_probs(), stock.node_moments(), stock.kind());
}

StockTree modified_log_return_tree(double s0, double nu, double sigma, double p_up, const TimeGrid& grid,
                                   TreeLimits limits) {
    check_steps(grid.steps(), limits);
    if (!(p_up > 0.0 && p_up < 1.0)) {
        throw Error(ErrorCode::DegenerateProbability, "p_up = " + num(p_up) + " is outside (0,1)");
    }
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
    if (!(s0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "s0 must be positive");
    const int steps = grid.steps();
    const double odds = (1.0 - p_up) / p_up;
    const double mu_star = nu - 0.5 * sigma * sigma * odds;
    std::vector<double> cum(total_nodes(steps), 0.0);
    for (int n = 0; n < steps; ++n) {
        const double dt = grid.dt(n);
        const double up = mu_star * dt + sigma * std::sqrt(odds * dt);
        const double down = mu_star * dt - sigma * std::sqrt(dt / odds);
        const std::size_t off = stage_offset(n);
        const std::size_t child_off = stage_offset(n + 1);
        for (std::size_t i = 0; i < stage_size(n); ++i) {
            cum[child_off + 2 * i] = cum[off + i] + down;
            cum[child_off + 2 * i + 1] = cum[off + i] + up;
        }
    }
    std::vector<double> values(cum.size());
    parallel_for(cum.size(), [&](std::size_t k) { values[k] = s0 * std::exp(cum[k]); });
    return StockTree(grid, std::move(values), std::vector<double>(total_nodes(steps - 1), p_up),
                     std::vector<NodeMoments>(total_nodes(steps - 1), NodeMoments{mu_star, sigma}), ReturnKind::Log);
}

double bsm_price(double s, double k, double r, double sigma, double t, OptionKind kind) {
    if (!(s > 0.0 && k > 0.0 && sigma > 0.0 && t > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "spot, strike, sigma and t must be positive");
    }
    const double vol = sigma * std::sqrt(t);
    const double d1 = (std::log(s / k) + (r + 0.5 * sigma * sigma) * t) / vol;
    const double d2 = d1 - vol;
    const double df = std::exp(-r * t);
    switch (kind) {
        case OptionKind::Call: return s * normal_cdf(d1) - k * df * normal_cdf(d2);
        case OptionKind::Put: return k * df * normal_cdf(-d2) - s * normal_cdf(-d1);
        case OptionKind::Custom: break;
    }
    throw Error(ErrorCode::InvalidArgument, "closed form covers calls and puts only");
}

double price_sensitivity_to_p(const std::function<double(double)>& price_at_p, double p, double h) {
    if (!(h > 0.0 && p - h > 0.0 && p + h < 1.0)) {
        throw Error(ErrorCode::DegenerateProbability, "p +/- h must stay inside (0,1)");
    }
    return (price_at_p(p + h) - price_at_p(p - h)) / (2.0 * h);
}

double mad(const std::vector<double>& model, const std::vector<double>& market) {
    if (model.size() != market.size()) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(model.size()) + " model vs " +
                                                   std::to_string(market.size()) + " market prices");
    }
    if (model.empty()) throw Error(ErrorCode::Empty, "no prices to compare");
    double sum = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) sum += std::fabs(model[i] - market[i]);
    return sum / static_cast<double>(model.size());
}

}  // namespace bitlattice
