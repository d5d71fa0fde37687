#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bitlattice/tree_engine.hpp"

namespace bitlattice {

enum class OptionKind { Call, Put, Custom };
enum class ExerciseStyle { European, American };

class Payoff {
public:
    static Payoff call(double strike);
    static Payoff put(double strike);
    static Payoff custom(std::function<double(double)> g);

    double operator()(double s) const;
    OptionKind kind() const noexcept { return kind_; }
    double strike() const noexcept { return strike_; }

private:
    OptionKind kind_ = OptionKind::Call;
    double strike_ = 0.0;
    std::function<double(double)> g_;
};

struct OptionSpec {
    ExerciseStyle style = ExerciseStyle::European;
    Payoff payoff = Payoff::call(1.0);
    std::optional<double> expiry;  // checked against the grid maturity when set
};

enum class QMethod { Replication, ThetaForm };
enum class ExerciseSource { MarketValue, FairHolding };

struct PricingOptions {
    QMethod q_method = QMethod::Replication;
    bool keep_nodes = false;
};

struct PriceReport {
    double value = 0.0;
    double delta_root = 0.0;
    double q_root = 0.0;
    // Flat per-node values (and deltas for interior nodes) when keep_nodes is set.
    std::vector<double> node_values;
    std::vector<double> node_deltas;
    std::string q_method;
    std::string discounting;
    std::string exercise;
};

double risk_neutral_q_replication(double s_u, double s_d, double r_inst, double dt);
double theta_market_price_of_risk(double mu, double r_inst, double sigma, double p_up);
/// q = p - (1 - p) theta sqrt(dt); ArbitrageViolation if it leaves (0,1).
double risk_neutral_q_theta(double theta, double p_up, double dt);
double delta_position(double f_up, double f_down, double s_up, double s_down);

/// Risk-neutral up-probability at interior node (stage, index).
double node_risk_neutral_q(const StockTree& stock, int stage, std::size_t index, double r_inst, QMethod method);

PriceReport price_european(const StockTree& stock, const RateSurface& rates, const OptionSpec& spec,
                           PricingOptions options = {});
PriceReport price_american(const StockTree& stock, const RateSurface& rates, const OptionSpec& spec,
                           ExerciseSource source, PricingOptions options = {});

/// Discounted q-expectation of the terminal market values, node by node.
StockTree fair_holding_stock_tree(const StockTree& stock, const RateSurface& rates,
                                  QMethod method = QMethod::Replication);

/// Log-return tree with conditional log mean mu* dt and variance sigma^2 dt,
/// mu* = nu - sigma^2 (1 - p) / (2p).
StockTree modified_log_return_tree(double s0, double nu, double sigma, double p_up, const TimeGrid& grid,
                                   TreeLimits limits = {});

double bsm_price(double s, double k, double r, double sigma, double t, OptionKind kind);

/// Central finite difference of price(p) at p.
double price_sensitivity_to_p(const std::function<double(double)>& price_at_p, double p, double h = 1e-4);

double mad(const std::vector<double>& model, const std::vector<double>& market);

}  // namespace bitlattice
