#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "bitlattice/market_data.hpp"
#include "bitlattice/path_key.hpp"

namespace bitlattice {

inline constexpr int kMaxHorizon = 24;

/// Joint probabilities of every length-N up/down path, estimated as sample
/// proportions over V non-overlapping windows. Index i of joint() is the path
/// whose packed bits equal i (m_1 most significant).
class PathProbabilityTable {
public:
    /// Validates that every entry lies in [0,1] and that the entries sum to 1.
    PathProbabilityTable(int horizon, std::vector<double> joint, std::size_t sample_count);

    static PathProbabilityTable uniform(int horizon, std::size_t sample_count = 0);
    /// Product-form table for i.i.d. steps with up-probability p.
    static PathProbabilityTable independent(int horizon, double p_up, std::size_t sample_count = 0);

    int horizon() const noexcept { return horizon_; }
    std::size_t sample_count() const noexcept { return sample_count_; }
    std::span<const double> joint() const noexcept { return joint_; }
    double joint(const PathKey& path) const;

    /// Marginal probability of a prefix of length 0..N.
    double prefix_probability(const PathKey& prefix) const;

    friend bool operator==(const PathProbabilityTable&, const PathProbabilityTable&) = default;

private:
    int horizon_;
    std::vector<double> joint_;
    std::size_t sample_count_;
};

/// Splits signs into floor(|signs|/N) consecutive windows from the start and
/// counts each path. A positive `smooth` adds that pseudo-count to every path
/// before normalizing.
PathProbabilityTable estimate_path_probabilities(const SignSequence& signs, int horizon, double smooth = 0.0);

/// P(next | prefix) = P(prefix + next) / P(prefix).
double conditional_probability(const PathProbabilityTable& table, const PathKey& prefix, int next);

/// P(up | node) for every node of stages 0..stages-1, stored flat like a tree
/// (stage n at offset 2^n - 1). Throws ZeroPrefixMass naming the first
/// unobserved node.
std::vector<double> conditional_up_probabilities(const PathProbabilityTable& table, int stages);

struct ZTestEntry {
    PathKey path;
    double estimate = 0.0;
    double z_stat = 0.0;
    double p_value = 0.0;  // one-sided, in the direction of the deviation
    double p_value_upper = 0.0;
    double p_value_lower = 0.0;
    bool flag_high = false;
    bool flag_low = false;
};

struct ZTestReport {
    double alpha = 0.05;
    double null_probability = 0.0;
    std::size_t sample_count = 0;
    std::vector<ZTestEntry> entries;
};

inline constexpr std::size_t kMinZTestSamples = 30;

/// One-sided z-tests of every full path against the uniform value 1/2^N.
ZTestReport uniform_z_test(const PathProbabilityTable& table, double alpha);

/// One table per window [k*step, k*step + window_len) that fits in the data.
std::vector<PathProbabilityTable> rolling_estimates(const SignSequence& signs, int horizon, std::size_t window_len,
                                                    std::size_t step, double smooth = 0.0);

nlohmann::json to_json(const PathProbabilityTable& table);
PathProbabilityTable table_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ZTestReport& report);
void write_ztest_csv(std::ostream& out, const ZTestReport& report);

}  // namespace bitlattice
