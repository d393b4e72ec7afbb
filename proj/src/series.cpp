#include "shipcast/series.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "shipcast/csv.hpp"
#include "shipcast/error.hpp"
#include "shipcast/rng.hpp"

namespace shipcast {

WeeklySeries::WeeklySeries(Date start_week, std::vector<double> values)
    : start_(start_week), values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("WeeklySeries: values must be non-empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!(values_[i] >= 0.0) || !std::isfinite(values_[i])) {
            throw std::invalid_argument(
                fmt::format("WeeklySeries: value {} at index {} is not a finite non-negative number",
                            values_[i], i));
        }
    }
}

double WeeklySeries::sum() const noexcept { return std::accumulate(values_.begin(), values_.end(), 0.0); }

void ForecastConfig::validate() const {
    if (horizon < 1) throw std::invalid_argument("ForecastConfig: horizon must be >= 1");
    if (lookback < horizon) {
        throw std::invalid_argument(
            fmt::format("ForecastConfig: lookback {} must be >= horizon {}", lookback, horizon));
    }
}

namespace {
void check_pair(std::span<const double> a, std::span<const double> f, const char* name) {
    if (a.size() != f.size()) {
        throw std::invalid_argument(
            fmt::format("{}: length mismatch ({} actual vs {} forecast)", name, a.size(), f.size()));
    }
    if (a.empty()) throw std::invalid_argument(fmt::format("{}: empty input", name));
}
}  // namespace

double mae(std::span<const double> actual, std::span<const double> forecast) {
    check_pair(actual, forecast, "mae");
    double total = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) total += std::abs(actual[i] - forecast[i]);
    return total / static_cast<double>(actual.size());
}

double smape(std::span<const double> actual, std::span<const double> forecast) {
    check_pair(actual, forecast, "smape");
    double total = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double denom = std::abs(actual[i]) + std::abs(forecast[i]);
        if (denom > 0.0) total += 2.0 * std::abs(actual[i] - forecast[i]) / denom;
    }
    return 100.0 * total / static_cast<double>(actual.size());
}

MetricReport evaluate_forecast(std::string model_label, std::span<const double> actual,
                               std::span<const double> forecast) {
    return MetricReport{std::move(model_label), mae(actual, forecast), smape(actual, forecast)};
}

std::vector<Window> sliding_windows(std::span<const double> values, const ForecastConfig& cfg) {
    cfg.validate();
    const std::size_t need = cfg.lookback + cfg.horizon;
    if (values.size() < need) {
        throw std::invalid_argument(fmt::format(
            "sliding_windows: series length {} shorter than lookback + horizon = {}", values.size(), need));
    }
    std::vector<Window> out;
    out.reserve(values.size() - need + 1);
    for (std::size_t o = 0; o + need <= values.size(); ++o) {
        const auto in = values.subspan(o, cfg.lookback);
        const auto tg = values.subspan(o + cfg.lookback, cfg.horizon);
        out.push_back(Window{{in.begin(), in.end()}, {tg.begin(), tg.end()}});
    }
    return out;
}

WeeklySeries make_synthetic(const SyntheticSpec& spec) {
    std::size_t max_period = 0;
    for (const auto& s : spec.seasonals) {
        if (s.period < 1) throw std::invalid_argument("make_synthetic: seasonal period must be >= 1");
        max_period = std::max(max_period, s.period);
    }
    if (spec.length == 0 || spec.length < 2 * max_period) {
        throw std::invalid_argument(fmt::format(
            "make_synthetic: length {} must be positive and >= 2 * max period ({})", spec.length, max_period));
    }
    if (spec.noise_sd < 0.0) throw std::invalid_argument("make_synthetic: noise_sd must be >= 0");

    SplitMix64 rng(spec.seed);
    std::vector<double> values(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
        const double tt = static_cast<double>(t);
        double v = spec.base + spec.trend_slope * tt;
        for (const auto& s : spec.seasonals) {
            v += s.amplitude * std::sin(2.0 * std::numbers::pi * tt / static_cast<double>(s.period));
        }
        if (spec.noise_sd > 0.0) v += spec.noise_sd * rng.normal();
        values[t] = std::max(0.0, v);
    }
    return WeeklySeries(spec.start_week, std::move(values));
}

WeeklySeries make_nonlinear_benchmark(std::uint64_t seed, std::size_t length) {
    if (length < 104) throw std::invalid_argument("make_nonlinear_benchmark: length must be >= 104");
    SplitMix64 rng(seed);
    const double shift_at = static_cast<double>(length) - 30.0;
    std::vector<double> values(length);
    for (std::size_t t = 0; t < length; ++t) {
        const double tt = static_cast<double>(t);
        double level = 450.0 + 0.9 * tt;
        if (tt >= shift_at) level *= 0.55;
        const double annual = 0.30 * std::sin(2.0 * std::numbers::pi * tt / 52.0 + 0.7);
        const double monthly = 0.12 * std::sin(2.0 * std::numbers::pi * tt / 4.0 + 0.3);
        const double v = level * (1.0 + annual) * (1.0 + monthly) * (1.0 + 0.04 * rng.normal());
        values[t] = std::max(0.0, v);
    }
    return WeeklySeries(SyntheticSpec{}.start_week, std::move(values));
}

void write_series_csv(std::ostream& out, const WeeklySeries& series) {
    out << "iso_week_start,quantity\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << format_iso(series.week(i)) << ',' << fmt::format("{}", series[i]) << '\n';
    }
}

WeeklySeries read_series_csv(std::istream& in) {
    CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row)) throw DataError("series CSV: empty file");
    if (row.size() < 2 || row[0] != "iso_week_start" || row[1] != "quantity") {
        throw DataError("series CSV: expected header 'iso_week_start,quantity'");
    }
    std::optional<Date> start;
    std::vector<double> values;
    while (reader.next(row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != 2) throw DataError(fmt::format("series CSV line {}: expected 2 fields", reader.line()));
        const auto d = parse_date(row[0]);
        if (!d) throw DataError(fmt::format("series CSV line {}: bad date '{}'", reader.line(), row[0]));
        if (!start) {
            start = *d;
        } else if (*d != *start + std::chrono::days{7 * static_cast<long>(values.size())}) {
            throw DataError(fmt::format("series CSV line {}: weeks must be consecutive", reader.line()));
        }
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(row[1], &used);
            if (used != row[1].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw DataError(fmt::format("series CSV line {}: bad quantity '{}'", reader.line(), row[1]));
        }
        values.push_back(v);
    }
    if (!start) throw DataError("series CSV: no data rows");
    try {
        return WeeklySeries(*start, std::move(values));
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("series CSV: ") + e.what());
    }
}

}  // namespace shipcast
