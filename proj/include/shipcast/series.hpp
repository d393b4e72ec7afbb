#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shipcast/date.hpp"

namespace shipcast {

/// Univariate weekly demand series. Values are non-negative and non-empty.
class WeeklySeries {
public:
    WeeklySeries(Date start_week, std::vector<double> values);

    Date start_week() const noexcept { return start_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Calendar date of bucket i (start_week + 7i days).
    Date week(std::size_t i) const noexcept { return start_ + std::chrono::days{7 * static_cast<long>(i)}; }
    double sum() const noexcept;

    friend bool operator==(const WeeklySeries&, const WeeklySeries&) = default;

private:
    Date start_;
    std::vector<double> values_;
};

/// Lookback/horizon pair shared by every forecaster. Requires L >= H >= 1.
struct ForecastConfig {
    std::size_t lookback = 8;
    std::size_t horizon = 4;

    void validate() const;
};

struct Forecast {
    std::string model_label;
    std::vector<double> values;
    Date horizon_start_week;
};

struct MetricReport {
    std::string model_label;
    double mae = 0.0;
    double smape = 0.0;  // percent, [0, 200]
};

double mae(std::span<const double> actual, std::span<const double> forecast);

/// Two-sided SMAPE in percent: (100/n) sum 2|a-f| / (|a|+|f|).
/// Terms with |a|+|f| = 0 contribute 0.
double smape(std::span<const double> actual, std::span<const double> forecast);

MetricReport evaluate_forecast(std::string model_label, std::span<const double> actual,
                               std::span<const double> forecast);

struct Window {
    std::vector<double> input;   // length L
    std::vector<double> target;  // length H, immediately after input
};

/// Every stride-1 (input, target) window; count = n - L - H + 1.
std::vector<Window> sliding_windows(std::span<const double> values, const ForecastConfig& cfg);
inline std::vector<Window> sliding_windows(const WeeklySeries& s, const ForecastConfig& cfg) {
    return sliding_windows(s.values(), cfg);
}

struct SeasonalTerm {
    std::size_t period = 0;
    double amplitude = 0.0;
};

struct SyntheticSpec {
    std::size_t length = 0;
    double base = 0.0;
    double trend_slope = 0.0;
    std::vector<SeasonalTerm> seasonals;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
    Date start_week = Date{std::chrono::year{2015} / std::chrono::January / 5};  // a Monday
};

/// base + slope*t + sum_k amp_k sin(2 pi t / period_k) + N(0, noise_sd^2), clamped at 0.
/// Noise comes from SplitMix64(seed), so output is reproducible bit for bit.
WeeklySeries make_synthetic(const SyntheticSpec& spec);

/// Seeded benchmark: linear growth, multiplicative seasonality at periods 4
/// and 52, 4% multiplicative noise, and a 45% level drop 30 weeks before the
/// end. After the drop last year's seasonal swings are far too large in
/// absolute terms, which an additive decomposition cannot see.
WeeklySeries make_nonlinear_benchmark(std::uint64_t seed, std::size_t length = 208);

/// Two-column CSV: iso_week_start,quantity.
void write_series_csv(std::ostream& out, const WeeklySeries& series);
WeeklySeries read_series_csv(std::istream& in);

}  // namespace shipcast
