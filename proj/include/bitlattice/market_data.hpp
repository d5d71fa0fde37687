#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bitlattice {

struct PriceObservation {
    std::chrono::year_month_day date;
    double close = 0.0;
};

/// Daily closing prices. Dates are strictly increasing and every close is
/// positive; each observation is one trading step regardless of calendar gaps.
class PriceSeries {
public:
    PriceSeries() = default;
    explicit PriceSeries(std::vector<PriceObservation> observations);

    std::size_t size() const noexcept { return observations_.size(); }
    bool empty() const noexcept { return observations_.empty(); }
    const PriceObservation& operator[](std::size_t i) const { return observations_[i]; }
    const std::vector<PriceObservation>& observations() const noexcept { return observations_; }
    std::vector<double> closes() const;

private:
    std::vector<PriceObservation> observations_;
};

struct ReturnSeries {
    std::vector<double> values;
};

struct DifferenceSeries {
    std::vector<double> values;
};

/// 1 = up (strictly positive return), 0 = down or flat.
struct SignSequence {
    std::vector<std::uint8_t> bits;
};

std::chrono::year_month_day parse_date(const std::string& text);
std::string format_date(const std::chrono::year_month_day& date);

/// Reads `YYYY-MM-DD,<close>` rows. Blank lines are skipped; `skip_header`
/// drops the first line unconditionally.
PriceSeries parse_price_csv(std::istream& in, bool skip_header = false);
PriceSeries load_price_csv(const std::filesystem::path& path, bool skip_header = false);
void write_price_csv(std::ostream& out, const PriceSeries& series);

ReturnSeries to_simple_returns(const PriceSeries& series);
DifferenceSeries to_first_differences(const PriceSeries& series);
SignSequence to_signs(const ReturnSeries& returns);
SignSequence to_signs(std::span<const double> values);

/// `index,value` CSV used for every derived series.
void write_series_csv(std::ostream& out, std::span<const double> values);

}  // namespace bitlattice
