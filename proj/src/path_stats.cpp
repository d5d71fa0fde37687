#include "bitlattice/path_stats.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>

#include "bitlattice/error.hpp"
#include "bitlattice/normal.hpp"
#include "bitlattice/parallel.hpp"

namespace bitlattice {

namespace {

constexpr double kNormalizationTolerance = 1e-9;

void check_horizon(int horizon) {
    if (horizon < 1 || horizon > kMaxHorizon) {
        throw Error(ErrorCode::InvalidHorizon,
                    "horizon " + std::to_string(horizon) + " outside [1, " + std::to_string(kMaxHorizon) + "]");
    }
}

PathProbabilityTable estimate_range(std::span<const std::uint8_t> bits, int horizon, double smooth) {
    const auto n = static_cast<std::size_t>(horizon);
    const std::size_t windows = bits.size() / n;
    std::vector<double> counts(stage_size(horizon), 0.0);
    for (std::size_t w = 0; w < windows; ++w) {
        std::uint64_t path = 0;
        for (std::size_t k = 0; k < n; ++k) path = (path << 1) | (bits[w * n + k] ? 1U : 0U);
        counts[path] += 1.0;
    }
    const double total = static_cast<double>(windows) + smooth * static_cast<double>(counts.size());
    for (double& c : counts) c = (c + smooth) / total;
    return PathProbabilityTable(horizon, std::move(counts), windows);
}

}  // namespace

PathProbabilityTable::PathProbabilityTable(int horizon, std::vector<double> joint, std::size_t sample_count)
    : horizon_(horizon), joint_(std::move(joint)), sample_count_(sample_count) {
    check_horizon(horizon_);
    if (joint_.size() != stage_size(horizon_)) {
        throw Error(ErrorCode::LengthMismatch, "joint table needs 2^N = " + std::to_string(stage_size(horizon_)) +
                                                   " entries, got " + std::to_string(joint_.size()));
    }
    double sum = 0.0;
    for (double p : joint_) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "joint probability outside [0,1]");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > kNormalizationTolerance) {
        throw Error(ErrorCode::InvalidArgument, "joint probabilities sum to " + std::to_string(sum));
    }
}

PathProbabilityTable PathProbabilityTable::uniform(int horizon, std::size_t sample_count) {
    check_horizon(horizon);
    const std::size_t n = stage_size(horizon);
    return PathProbabilityTable(horizon, std::vector<double>(n, 1.0 / static_cast<double>(n)), sample_count);
}

PathProbabilityTable PathProbabilityTable::independent(int horizon, double p_up, std::size_t sample_count) {
    check_horizon(horizon);
    if (!(p_up >= 0.0 && p_up <= 1.0)) throw Error(ErrorCode::DegenerateProbability, "p_up outside [0,1]");
    std::vector<double> joint(stage_size(horizon));
    for (std::size_t i = 0; i < joint.size(); ++i) {
        int ups = PathKey(i, horizon).up_count();
        joint[i] = std::pow(p_up, ups) * std::pow(1.0 - p_up, horizon - ups);
    }
    return PathProbabilityTable(horizon, std::move(joint), sample_count);
}

double PathProbabilityTable::joint(const PathKey& path) const {
    if (path.length() != horizon_) {
        throw Error(ErrorCode::HorizonMismatch, "path length " + std::to_string(path.length()) + " != horizon " +
                                                    std::to_string(horizon_));
    }
    return joint_[path.index()];
}

double PathProbabilityTable::prefix_probability(const PathKey& prefix) const {
    if (prefix.length() > horizon_) {
        throw Error(ErrorCode::HorizonMismatch, "prefix longer than table horizon");
    }
    const int free_bits = horizon_ - prefix.length();
    const std::size_t begin = static_cast<std::size_t>(prefix.index()) << free_bits;
    const std::size_t end = begin + stage_size(free_bits);
    return std::accumulate(joint_.begin() + static_cast<std::ptrdiff_t>(begin),
                           joint_.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
}

PathProbabilityTable estimate_path_probabilities(const SignSequence& signs, int horizon, double smooth) {
    check_horizon(horizon);
    if (smooth < 0.0) throw Error(ErrorCode::InvalidArgument, "smoothing pseudo-count must be >= 0");
    if (signs.bits.size() < static_cast<std::size_t>(horizon)) {
        throw Error(ErrorCode::TooShort, std::to_string(signs.bits.size()) + " signs < horizon " + std::to_string(horizon));
    }
    return estimate_range(signs.bits, horizon, smooth);
}

double conditional_probability(const PathProbabilityTable& table, const PathKey& prefix, int next) {
    if (prefix.length() >= table.horizon()) {
        throw Error(ErrorCode::HorizonMismatch, "prefix length must be below the table horizon");
    }
    const double mass = table.prefix_probability(prefix);
    if (!(mass > 0.0)) {
        throw Error(ErrorCode::ZeroPrefixMass, "prefix '" + prefix.to_string() + "' was never observed");
    }
    return table.prefix_probability(prefix.child(next)) / mass;
}

std::vector<double> conditional_up_probabilities(const PathProbabilityTable& table, int stages) {
    if (stages < 0 || stages > table.horizon()) {
        throw Error(ErrorCode::HorizonMismatch, "table horizon " + std::to_string(table.horizon()) + " < " +
                                                    std::to_string(stages) + " steps");
    }
    // prefix masses, aggregated from the full-length joint down to the root
    std::vector<std::vector<double>> mass(static_cast<std::size_t>(table.horizon()) + 1);
    const auto joint = table.joint();
    mass.back().assign(joint.begin(), joint.end());
    for (int n = table.horizon() - 1; n >= 0; --n) {
        auto& cur = mass[static_cast<std::size_t>(n)];
        const auto& next = mass[static_cast<std::size_t>(n) + 1];
        cur.resize(stage_size(n));
        for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = next[2 * i] + next[2 * i + 1];
    }
    std::vector<double> out(stages > 0 ? total_nodes(stages - 1) : 0);
    for (int n = 0; n < stages; ++n) {
        const auto& cur = mass[static_cast<std::size_t>(n)];
        const auto& next = mass[static_cast<std::size_t>(n) + 1];
        for (std::size_t i = 0; i < cur.size(); ++i) {
            if (!(cur[i] > 0.0)) {
                throw Error(ErrorCode::ZeroPrefixMass,
                            "node '" + PathKey(i, n).to_string() + "' was never observed; smooth the table");
            }
            out[stage_offset(n) + i] = next[2 * i + 1] / cur[i];
        }
    }
    return out;
}

ZTestReport uniform_z_test(const PathProbabilityTable& table, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
    const std::size_t v = table.sample_count();
    if (v < kMinZTestSamples) {
        throw Error(ErrorCode::SampleTooSmall, "z-test needs at least " + std::to_string(kMinZTestSamples) +
                                                   " windows, table has " + std::to_string(v));
    }
    ZTestReport report;
    report.alpha = alpha;
    report.sample_count = v;
    report.null_probability = 1.0 / static_cast<double>(stage_size(table.horizon()));
    const double p0 = report.null_probability;
    const double se = std::sqrt(p0 * (1.0 - p0) / static_cast<double>(v));
    const auto joint = table.joint();
    report.entries.reserve(joint.size());
    for (std::size_t i = 0; i < joint.size(); ++i) {
        ZTestEntry e;
        e.path = PathKey(i, table.horizon());
        e.estimate = joint[i];
        e.z_stat = (e.estimate - p0) / se;
        e.p_value_upper = 1.0 - normal_cdf(e.z_stat);
        e.p_value_lower = normal_cdf(e.z_stat);
        e.p_value = std::min(e.p_value_upper, e.p_value_lower);
        e.flag_high = e.p_value_upper < alpha;
        e.flag_low = e.p_value_lower < alpha;
        report.entries.push_back(e);
    }
    return report;
}

std::vector<PathProbabilityTable> rolling_estimates(const SignSequence& signs, int horizon, std::size_t window_len,
                                                    std::size_t step, double smooth) {
    check_horizon(horizon);
    if (step < 1) throw Error(ErrorCode::InvalidArgument, "step must be >= 1");
    if (window_len < static_cast<std::size_t>(horizon)) {
        throw Error(ErrorCode::TooShort, "window length " + std::to_string(window_len) + " < horizon");
    }
    if (signs.bits.size() < window_len) {
        throw Error(ErrorCode::TooShort, std::to_string(signs.bits.size()) + " signs < window length " +
                                             std::to_string(window_len));
    }
    const std::size_t positions = (signs.bits.size() - window_len) / step + 1;
    std::vector<std::optional<PathProbabilityTable>> slots(positions);
    std::span<const std::uint8_t> all(signs.bits);
    parallel_for(positions, [&](std::size_t k) {
        slots[k] = estimate_range(all.subspan(k * step, window_len), horizon, smooth);
    });
    std::vector<PathProbabilityTable> out;
    out.reserve(positions);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

nlohmann::json to_json(const PathProbabilityTable& table) {
    nlohmann::json joint = nlohmann::json::object();
    const auto values = table.joint();
    for (std::size_t i = 0; i < values.size(); ++i) {
        joint[PathKey(i, table.horizon()).to_string()] = values[i];
    }
    return {{"horizon", table.horizon()}, {"sample_count", table.sample_count()}, {"joint", joint}};
}

PathProbabilityTable table_from_json(const nlohmann::json& j) {
    try {
        const int horizon = j.at("horizon").get<int>();
        check_horizon(horizon);
        const auto v = j.at("sample_count").get<std::size_t>();
        std::vector<double> joint(stage_size(horizon), 0.0);
        for (const auto& [key, value] : j.at("joint").items()) {
            PathKey path = PathKey::parse(key);
            if (path.length() != horizon) {
                throw Error(ErrorCode::HorizonMismatch, "joint key '" + key + "' has wrong length");
            }
            joint[path.index()] = value.get<double>();
        }
        return PathProbabilityTable(horizon, std::move(joint), v);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed probability table JSON: ") + e.what());
    }
}

nlohmann::json to_json(const ZTestReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : report.entries) {
        rows.push_back({{"path", e.path.to_string()},
                        {"estimate", e.estimate},
                        {"z_stat", e.z_stat},
                        {"p_value", e.p_value},
                        {"flag_high", e.flag_high},
                        {"flag_low", e.flag_low}});
    }
    return {{"alpha", report.alpha},
            {"null_probability", report.null_probability},
            {"sample_count", report.sample_count},
            {"paths", rows}};
}

void write_ztest_csv(std::ostream& out, const ZTestReport& report) {
    out << "path_index,path_bits,estimate,z_stat,p_value,p_value_upper,p_value_lower,flag_high,flag_low,"
           "null_probability,upper_bound,lower_bound\n";
    // z-test acceptance band for the estimate itself (plot data for the dash-dotted bounds)
    const double p0 = report.null_probability;
    const double se = std::sqrt(p0 * (1.0 - p0) / static_cast<double>(report.sample_count));
    double z_crit = 0.0;
    {
        double lo = 0.0, hi = 40.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (1.0 - normal_cdf(mid) > report.alpha) lo = mid; else hi = mid;
        }
        z_crit = 0.5 * (lo + hi);
    }
    out << std::setprecision(12);
    for (const auto& e : report.entries) {
        out << e.path.rank() << ',' << e.path.to_string() << ',' << e.estimate << ',' << e.z_stat << ',' << e.p_value
            << ',' << e.p_value_upper << ',' << e.p_value_lower << ',' << (e.flag_high ? 1 : 0) << ','
            << (e.flag_low ? 1 : 0) << ',' << p0 << ',' << p0 + z_crit * se << ',' << p0 - z_crit * se << '\n';
    }
}

}  // namespace bitlattice
