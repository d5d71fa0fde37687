#include "bitlattice/market_data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "bitlattice/error.hpp"

namespace bitlattice {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

bool parse_int(const std::string& s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

void require_length(std::size_t n) {
    if (n < 2) {
        throw Error(ErrorCode::TooShort, "price series needs at least 2 observations, got " + std::to_string(n));
    }
}

}  // namespace

PriceSeries::PriceSeries(std::vector<PriceObservation> observations) : observations_(std::move(observations)) {
    for (std::size_t i = 0; i < observations_.size(); ++i) {
        const auto& obs = observations_[i];
        if (!(obs.close > 0.0) || !std::isfinite(obs.close)) {
            throw Error(ErrorCode::NonPositivePrice, "observation " + std::to_string(i) + " has close " + std::to_string(obs.close));
        }
        if (i > 0 && !(observations_[i - 1].date < obs.date)) {
            throw Error(ErrorCode::NonMonotoneDates, "observation " + std::to_string(i) + " date " + format_date(obs.date) +
                                                         " does not follow " + format_date(observations_[i - 1].date));
        }
    }
}

std::vector<double> PriceSeries::closes() const {
    std::vector<double> out;
    out.reserve(observations_.size());
    for (const auto& obs : observations_) out.push_back(obs.close);
    return out;
}

std::chrono::year_month_day parse_date(const std::string& text) {
    using namespace std::chrono;
    int y = 0, m = 0, d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_int(text.substr(0, 4), y) ||
        !parse_int(text.substr(5, 2), m) || !parse_int(text.substr(8, 2), d)) {
        throw Error(ErrorCode::MalformedRow, "bad date '" + text + "'");
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw Error(ErrorCode::MalformedRow, "invalid calendar date '" + text + "'");
    return ymd;
}

std::string format_date(const std::chrono::year_month_day& date) {
    std::ostringstream out;
    out << std::setfill('0') << std::setw(4) << static_cast<int>(date.year()) << '-' << std::setw(2)
        << static_cast<unsigned>(date.month()) << '-' << std::setw(2) << static_cast<unsigned>(date.day());
    return out.str();
}

PriceSeries parse_price_csv(std::istream& in, bool skip_header) {
    std::vector<PriceObservation> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_header && line_no == 1) continue;
        std::string row = trim(line);
        if (row.empty()) continue;
        auto comma = row.find(',');
        if (comma == std::string::npos || row.find(',', comma + 1) != std::string::npos) {
            throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": expected 'date,close'");
        }
        PriceObservation obs;
        try {
            obs.date = parse_date(trim(row.substr(0, comma)));
        } catch (const Error&) {
            throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": bad date");
        }
        std::string close_text = trim(row.substr(comma + 1));
        std::size_t consumed = 0;
        try {
            obs.close = std::stod(close_text, &consumed);
        } catch (const std::exception&) {
            consumed = 0;
        }
        if (consumed == 0 || consumed != close_text.size() || !std::isfinite(obs.close)) {
            throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": bad close '" + close_text + "'");
        }
        if (!(obs.close > 0.0)) {
            throw Error(ErrorCode::NonPositivePrice, "line " + std::to_string(line_no) + ": close " + close_text);
        }
        if (!rows.empty() && !(rows.back().date < obs.date)) {
            throw Error(ErrorCode::NonMonotoneDates, "line " + std::to_string(line_no) + ": date " + format_date(obs.date));
        }
        rows.push_back(obs);
    }
    return PriceSeries(std::move(rows));
}

PriceSeries load_price_csv(const std::filesystem::path& path, bool skip_header) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");
    return parse_price_csv(in, skip_header);
}

void write_price_csv(std::ostream& out, const PriceSeries& series) {
    out << std::setprecision(17);
    for (const auto& obs : series.observations()) {
        out << format_date(obs.date) << ',' << obs.close << '\n';
    }
}

ReturnSeries to_simple_returns(const PriceSeries& series) {
    require_length(series.size());
    ReturnSeries out;
    out.values.reserve(series.size() - 1);
    for (std::size_t k = 0; k + 1 < series.size(); ++k) {
        double prev = series[k].close;
        out.values.push_back((series[k + 1].close - prev) / prev);
    }
    return out;
}

DifferenceSeries to_first_differences(const PriceSeries& series) {
    require_length(series.size());
    DifferenceSeries out;
    out.values.reserve(series.size() - 1);
    for (std::size_t k = 0; k + 1 < series.size(); ++k) {
        out.values.push_back(series[k + 1].close - series[k].close);
    }
    return out;
}

SignSequence to_signs(std::span<const double> values) {
    SignSequence out;
    out.bits.reserve(values.size());
    for (double v : values) out.bits.push_back(v > 0.0 ? 1 : 0);
    return out;
}

SignSequence to_signs(const ReturnSeries& returns) { return to_signs(std::span<const double>(returns.values)); }

void write_series_csv(std::ostream& out, std::span<const double> values) {
    out << "index,value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < values.size(); ++i) out << i << ',' << values[i] << '\n';
}

}  // namespace bitlattice
