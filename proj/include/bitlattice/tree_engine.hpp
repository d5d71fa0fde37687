#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "bitlattice/market_data.hpp"
#include "bitlattice/path_key.hpp"
#include "bitlattice/path_stats.hpp"

namespace bitlattice {

/// Trading times 0 = t_0 < t_1 < ... < t_N = T in years.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> times);
    static TimeGrid uniform(double horizon_years, int steps);

    int steps() const noexcept { return static_cast<int>(times_.size()) - 1; }
    double time(int n) const { return times_.at(static_cast<std::size_t>(n)); }
    /// Length of step (t_n, t_{n+1}].
    double dt(int n) const { return time(n + 1) - time(n); }
    double maturity() const noexcept { return times_.back(); }
    const std::vector<double>& times() const noexcept { return times_; }

private:
    std::vector<double> times_;
};

struct NodeMoments {
    double mu = 0.0;     // per-year drift
    double sigma = 0.0;  // per-sqrt-year volatility
};

/// Per-node drift and volatility used for the step that starts at the node.
class MomentSurface {
public:
    using Fn = std::function<NodeMoments(const PathKey&)>;

    explicit MomentSurface(Fn fn) : fn_(std::move(fn)) {}
    static MomentSurface constant(double mu, double sigma);
    /// mu = mean(R)/dt, sigma = std(R)/sqrt(dt) with the n-1 sample variance.
    static MomentSurface calibrated(const ReturnSeries& returns, double dt);

    NodeMoments at(const PathKey& node) const { return fn_(node); }

private:
    Fn fn_;
};

/// Instantaneous simple riskless rate per node, applied over the step that starts there.
class RateSurface {
public:
    using Fn = std::function<double(const PathKey&)>;

    explicit RateSurface(Fn fn) : fn_(std::move(fn)) {}
    static RateSurface constant(double r);

    double at(const PathKey& node) const { return fn_(node); }

private:
    Fn fn_;
};

/// Simple per-year rate that grows like exp(r_cont * dt) over one step.
double simple_equivalent_rate(double r_cont, double dt);

struct Multipliers {
    double up = 0.0;
    double down = 0.0;
};

Multipliers up_down_multipliers(double mu, double sigma, double p_up, double dt);

/// What one step of the tree means, for moment checks.
enum class ReturnKind { Simple, Log, Additive };

/// Full binary tree of stock values, stored flat: stage n occupies
/// [2^n - 1, 2^{n+1} - 1). Physical up-probabilities and moments are kept
/// for interior nodes only.
class StockTree {
public:
    StockTree(TimeGrid grid, std::vector<double> values, std::vector<double> up_probs,
              std::vector<NodeMoments> moments, ReturnKind kind);

    const TimeGrid& grid() const noexcept { return grid_; }
    int steps() const noexcept { return grid_.steps(); }
    ReturnKind kind() const noexcept { return kind_; }

    double value(const PathKey& node) const { return values_[stage_offset(node.length()) + node.index()]; }
    double value(int stage, std::size_t index) const { return values_[stage_offset(stage) + index]; }
    std::span<const double> stage(int n) const { return {values_.data() + stage_offset(n), stage_size(n)}; }
    const std::vector<double>& values() const noexcept { return values_; }

    double up_prob(int stage, std::size_t index) const { return up_probs_[stage_offset(stage) + index]; }
    const std::vector<double>& up_probs() const noexcept { return up_probs_; }
    const std::vector<NodeMoments>& node_moments() const noexcept { return moments_; }
    bool has_moments() const noexcept { return !moments_.empty(); }
    const NodeMoments& moments(int stage, std::size_t index) const { return moments_[stage_offset(stage) + index]; }

    void set_value(const PathKey& node, double v) { values_[stage_offset(node.length()) + node.index()] = v; }

private:
    TimeGrid grid_;
    std::vector<double> values_;
    std::vector<double> up_probs_;
    std::vector<NodeMoments> moments_;
    ReturnKind kind_;
};

struct TreeLimits {
    int max_steps = 24;
};

/// Up-probabilities from the table's conditionals along each path.
StockTree build_stock_tree(double s0, const TimeGrid& grid, const MomentSurface& moments,
                           const PathProbabilityTable& probs, TreeLimits limits = {});
/// Same construction with one up-probability at every node.
StockTree build_stock_tree(double s0, const TimeGrid& grid, const MomentSurface& moments, double p_up,
                           TreeLimits limits = {});

class BondTree {
public:
    BondTree(TimeGrid grid, std::vector<double> values);

    const TimeGrid& grid() const noexcept { return grid_; }
    int steps() const noexcept { return grid_.steps(); }
    double value(const PathKey& node) const { return values_[stage_offset(node.length()) + node.index()]; }
    double value(int stage, std::size_t index) const { return values_[stage_offset(stage) + index]; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    TimeGrid grid_;
    std::vector<double> values_;
};

/// With freeze_terminal the last step does not compound.
BondTree build_bond_tree(double beta0, const TimeGrid& grid, const RateSurface& rates, bool freeze_terminal = false,
                         TreeLimits limits = {});

struct MomentReport {
    double max_mean_error = 0.0;
    double max_variance_error = 0.0;
};

/// Worst deviation of one-step conditional moments from (mu dt, sigma^2 dt).
MomentReport conditional_moment_report(const StockTree& tree);

void write_tree_csv(std::ostream& out, const StockTree& stock, const BondTree* bond = nullptr);
nlohmann::json tree_to_json(const StockTree& stock, const BondTree* bond = nullptr);

// Shared by the tree builders: check step count and throw with the node named.
void check_steps(int steps, const TreeLimits& limits);
[[noreturn]] void rethrow_at_node(const PathKey& node);

}  // namespace bitlattice
