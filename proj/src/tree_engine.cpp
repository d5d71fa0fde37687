#include "bitlattice/tree_engine.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "bitlattice/error.hpp"
#include "bitlattice/parallel.hpp"

namespace bitlattice {

namespace {

std::string num(double x) {
    std::ostringstream s;
    s << std::setprecision(10) << x;
    return s.str();
}

template <class ProbAt>
StockTree build_core(double s0, const TimeGrid& grid, const MomentSurface& moments, ProbAt prob_at,
                     const TreeLimits& limits) {
    check_steps(grid.steps(), limits);
    if (!(s0 > 0.0) || !std::isfinite(s0)) throw Error(ErrorCode::InvalidArgument, "s0 must be positive, got " + num(s0));
    const int steps = grid.steps();
    std::vector<double> values(total_nodes(steps));
    std::vector<double> probs(total_nodes(steps - 1));
    std::vector<NodeMoments> node_moments(total_nodes(steps - 1));
    values[0] = s0;
    for (int n = 0; n < steps; ++n) {
        const double dt = grid.dt(n);
        const std::size_t off = stage_offset(n);
        const std::size_t child_off = stage_offset(n + 1);
        parallel_for(stage_size(n), [&](std::size_t i) {
            const PathKey key(i, n);
            try {
                const double p = prob_at(n, i);
                const NodeMoments m = moments.at(key);
                const Multipliers mult = up_down_multipliers(m.mu, m.sigma, p, dt);
                const double v = values[off + i];
                values[child_off + 2 * i] = v * mult.down;
                values[child_off + 2 * i + 1] = v * mult.up;
                probs[off + i] = p;
                node_moments[off + i] = m;
            } catch (...) {
                rethrow_at_node(key);
            }
        });
    }
    return StockTree(grid, std::move(values), std::move(probs), std::move(node_moments), ReturnKind::Simple);
}

}  // namespace

void check_steps(int steps, const TreeLimits& limits) {
    if (steps < 1) throw Error(ErrorCode::InvalidHorizon, "tree needs at least one step");
    if (steps > limits.max_steps || steps > kMaxPathLength - 1) {
        throw Error(ErrorCode::InvalidHorizon, std::to_string(steps) + " steps exceeds the cap of " +
                                                   std::to_string(limits.max_steps) + " (raise max_steps to override)");
    }
}

void rethrow_at_node(const PathKey& node) {
    const std::string where = "node '" + node.to_string() + "' (stage " + std::to_string(node.length()) + "): ";
    try {
        throw;
    } catch (const Error& e) {
        throw Error(e.code(), where + e.detail());
    }
}

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) throw Error(ErrorCode::InvalidHorizon, "time grid needs at least one step");
    if (times_.front() != 0.0) throw Error(ErrorCode::InvalidArgument, "time grid must start at 0");
    for (std::size_t k = 1; k < times_.size(); ++k) {
        if (!(times_[k] > times_[k - 1]) || !std::isfinite(times_[k])) {
            throw Error(ErrorCode::InvalidArgument, "time grid must be strictly increasing");
        }
    }
}

TimeGrid TimeGrid::uniform(double horizon_years, int steps) {
    if (steps < 1) throw Error(ErrorCode::InvalidHorizon, "time grid needs at least one step");
    if (!(horizon_years > 0.0)) throw Error(ErrorCode::InvalidArgument, "maturity must be positive");
    std::vector<double> t(static_cast<std::size_t>(steps) + 1);
    for (int n = 0; n <= steps; ++n) t[static_cast<std::size_t>(n)] = horizon_years * n / steps;
    t.back() = horizon_years;
    return TimeGrid(std::move(t));
}

MomentSurface MomentSurface::constant(double mu, double sigma) {
    return MomentSurface([m = NodeMoments{mu, sigma}](const PathKey&) { return m; });
}

MomentSurface MomentSurface::calibrated(const ReturnSeries& returns, double dt) {
    const auto& r = returns.values;
    if (r.size() < 2) throw Error(ErrorCode::TooShort, "calibration needs at least 2 returns");
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
    const double n = static_cast<double>(r.size());
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : r) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    return constant(mean / dt, sd / std::sqrt(dt));
}

RateSurface RateSurface::constant(double r) {
    return RateSurface([r](const PathKey&) { return r; });
}

double simple_equivalent_rate(double r_cont, double dt) { return std::expm1(r_cont * dt) / dt; }

Multipliers up_down_multipliers(double mu, double sigma, double p_up, double dt) {
    if (!(p_up > 0.0 && p_up < 1.0)) {
        throw Error(ErrorCode::DegenerateProbability, "p_up = " + num(p_up) + " is outside (0,1)");
    }
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive, got " + num(sigma));
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive, got " + num(dt));
    const double q = 1.0 - p_up;
    Multipliers m;
    m.up = 1.0 + mu * dt + sigma * std::sqrt(q / p_up * dt);
    m.down = 1.0 + mu * dt - sigma * std::sqrt(p_up / q * dt);
    if (!(m.down > 0.0)) {
        throw Error(ErrorCode::NegativePrice, "down multiplier " + num(m.down) + " <= 0 for mu=" + num(mu) +
                                                  " sigma=" + num(sigma) + " p_up=" + num(p_up) + " dt=" + num(dt) +
                                                  "; refine the grid or lower sigma");
    }
    return m;
}

StockTree::StockTree(TimeGrid grid, std::vector<double> values, std::vector<double> up_probs,
                     std::vector<NodeMoments> moments, ReturnKind kind)
    : grid_(std::move(grid)), values_(std::move(values)), up_probs_(std::move(up_probs)),
      moments_(std::move(moments)), kind_(kind) {
    const int n = grid_.steps();
    if (values_.size() != total_nodes(n) || up_probs_.size() != total_nodes(n - 1) ||
        (!moments_.empty() && moments_.size() != total_nodes(n - 1))) {
        throw Error(ErrorCode::LengthMismatch, "tree storage does not match a " + std::to_string(n) + "-step grid");
    }
}

StockTree build_stock_tree(double s0, const TimeGrid& grid, const MomentSurface& moments,
                           const PathProbabilityTable& probs, TreeLimits limits) {
    check_steps(grid.steps(), limits);
    if (probs.horizon() < grid.steps()) {
        throw Error(ErrorCode::HorizonMismatch, "probability table horizon " + std::to_string(probs.horizon()) +
                                                    " < tree steps " + std::to_string(grid.steps()));
    }
    const auto cond = conditional_up_probabilities(probs, grid.steps());
    auto prob_at = [&cond](int n, std::size_t i) { return cond[stage_offset(n) + i]; };
    return build_core(s0, grid, moments, prob_at, limits);
}

StockTree build_stock_tree(double s0, const TimeGrid& grid, const MomentSurface& moments, double p_up,
                           TreeLimits limits) {
    return build_core(s0, grid, moments, [p_up](int, std::size_t) { return p_up; }, limits);
}

BondTree::BondTree(TimeGrid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != total_nodes(grid_.steps())) {
        throw Error(ErrorCode::LengthMismatch, "bond storage does not match the grid");
    }
}

BondTree build_bond_tree(double beta0, const TimeGrid& grid, const RateSurface& rates, bool freeze_terminal,
                         TreeLimits limits) {
    check_steps(grid.steps(), limits);
    if (!(beta0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta0 must be positive, got " + num(beta0));
    const int steps = grid.steps();
    std::vector<double> values(total_nodes(steps));
    values[0] = beta0;
    for (int n = 0; n < steps; ++n) {
        const double dt = grid.dt(n);
        const bool frozen = freeze_terminal && n == steps - 1;
        const std::size_t off = stage_offset(n);
        const std::size_t child_off = stage_offset(n + 1);
        parallel_for(stage_size(n), [&](std::size_t i) {
            const PathKey key(i, n);
            const double r = rates.at(key);
            if (!(r >= 0.0)) {
                throw Error(ErrorCode::InvalidArgument, "node '" + key.to_string() + "': rate " + num(r) + " < 0");
            }
            const double grown = values[off + i] * (frozen ? 1.0 : 1.0 + r * dt);
            values[child_off + 2 * i] = grown;
            values[child_off + 2 * i + 1] = grown;
        });
    }
    return BondTree(grid, std::move(values));
}

MomentReport conditional_moment_report(const StockTree& tree) {
    if (!tree.has_moments() || tree.kind() == ReturnKind::Additive) {
        throw Error(ErrorCode::InvalidArgument, "tree carries no per-node moments to check");
    }
    MomentReport report;
    for (int n = 0; n < tree.steps(); ++n) {
        const double dt = tree.grid().dt(n);
        for (std::size_t i = 0; i < stage_size(n); ++i) {
            const double v = tree.value(n, i);
            const double vd = tree.value(n + 1, 2 * i);
            const double vu = tree.value(n + 1, 2 * i + 1);
            double ru = vu / v - 1.0;
            double rd = vd / v - 1.0;
            if (tree.kind() == ReturnKind::Log) {
                ru = std::log(vu / v);
                rd = std::log(vd / v);
            }
            const double p = tree.up_prob(n, i);
            const NodeMoments& m = tree.moments(n, i);
            const double mean = p * ru + (1.0 - p) * rd;
            const double var = p * (ru - mean) * (ru - mean) + (1.0 - p) * (rd - mean) * (rd - mean);
            report.max_mean_error = std::max(report.max_mean_error, std::fabs(mean - m.mu * dt));
            report.max_variance_error = std::max(report.max_variance_error, std::fabs(var - m.sigma * m.sigma * dt));
        }
    }
    return report;
}

void write_tree_csv(std::ostream& out, const StockTree& stock, const BondTree* bond) {
    if (bond && bond->steps() != stock.steps()) throw Error(ErrorCode::HorizonMismatch, "bond and stock trees differ in steps");
    out << "stage,path_bits,stock,bond\n" << std::setprecision(17);
    for (int n = 0; n <= stock.steps(); ++n) {
        for (std::size_t i = 0; i < stage_size(n); ++i) {
            out << n << ',' << PathKey(i, n).to_string() << ',' << stock.value(n, i) << ',';
            if (bond) out << bond->value(n, i);
            out << '\n';
        }
    }
}

nlohmann::json tree_to_json(const StockTree& stock, const BondTree* bond) {
    if (bond && bond->steps() != stock.steps()) throw Error(ErrorCode::HorizonMismatch, "bond and stock trees differ in steps");
    nlohmann::json nodes = nlohmann::json::object();
    for (int n = 0; n <= stock.steps(); ++n) {
        for (std::size_t i = 0; i < stage_size(n); ++i) {
            nlohmann::json node{{"stock", stock.value(n, i)}};
            if (bond) node["bond"] = bond->value(n, i);
            nodes[PathKey(i, n).to_string()] = std::move(node);
        }
    }
    return {{"steps", stock.steps()}, {"times", stock.grid().times()}, {"nodes", std::move(nodes)}};
}

}  // namespace bitlattice
