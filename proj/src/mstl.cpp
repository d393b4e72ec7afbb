#include "shipcast/mstl.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace shipcast::decomp {
namespace {

std::size_t next_odd_at_least(double x) {
    auto v = static_cast<std::size_t>(std::ceil(x - 1e-12));
    if (v < 3) v = 3;
    return v % 2 == 0 ? v + 1 : v;
}

// Fits every index of y (span may exceed y.size()).
std::vector<double> smooth_all(std::span<const double> y, std::size_t span, int degree,
                               std::span<const double> robustness) {
    const std::size_t n = y.size();
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = y[0];
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t left = 0;
        std::size_t right = n - 1;
        if (span < n) {
            left = std::min(i > span / 2 ? i - span / 2 : 0, n - span);
            right = left + span - 1;
        }
        const auto fit = loess_point(y, static_cast<double>(i), left, right, span, degree, robustness);
        out[i] = fit ? *fit : y[i];
    }
    return out;
}

// Moving average of length len; output length n - len + 1. Exact on constants.
std::vector<double> moving_average(std::span<const double> x, std::size_t len) {
    std::vector<double> out(x.size() - len + 1);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double ref = x[i];
        double acc = 0.0;
        for (std::size_t k = 0; k < len; ++k) acc += x[i + k] - ref;
        out[i] = ref + acc / static_cast<double>(len);
    }
    return out;
}

void check_degree(int degree) {
    if (degree != 0 && degree != 1) throw std::invalid_argument("LOESS degree must be 0 or 1");
}

}  // namespace

void LoessParams::validate() const {
    check_degree(degree);
    if (span % 2 == 0 || span < static_cast<std::size_t>(degree) + 2) {
        throw std::invalid_argument(fmt::format("LOESS span {} must be odd and >= degree + 2", span));
    }
}

std::optional<double> loess_point(std::span<const double> y, double xs, std::size_t left, std::size_t right,
                                  std::size_t span, int degree, std::span<const double> robustness) {
    const std::size_t npts = right - left + 1;
    double h = std::max(xs - static_cast<double>(left), static_cast<double>(right) - xs);
    if (span > npts) h += static_cast<double>((span - npts) / 2);

    thread_local std::vector<double> w;
    w.assign(npts, 0.0);
    double total = 0.0;
    for (std::size_t j = left; j <= right; ++j) {
        const double r = std::abs(static_cast<double>(j) - xs);
        double wj = 1.0;
        if (h > 0.0) {
            const double u = r / h;
            wj = u < 1.0 ? std::pow(1.0 - u * u * u, 3) : 0.0;
        }
        if (!robustness.empty()) wj *= robustness[j];
        w[j - left] = wj;
        total += wj;
    }
    if (!(total > 0.0)) return std::nullopt;
    for (auto& wj : w) wj /= total;

    if (degree >= 1 && h > 0.0) {
        double center = 0.0;
        for (std::size_t j = left; j <= right; ++j) center += w[j - left] * static_cast<double>(j);
        double spread = 0.0;
        for (std::size_t j = left; j <= right; ++j) {
            const double d = static_cast<double>(j) - center;
            spread += w[j - left] * d * d;
        }
        const double range = static_cast<double>(y.size() - 1);
        if (std::sqrt(spread) > 0.001 * range) {
            const double b = (xs - center) / spread;
            for (std::size_t j = left; j <= right; ++j) {
                w[j - left] *= b * (static_cast<double>(j) - center) + 1.0;
            }
        }
    }

    // The weights sum to one, so fitting deviations from a reference value
    // reproduces constant data exactly.
    const auto nearest = static_cast<std::size_t>(
        std::clamp(std::round(xs), static_cast<double>(left), static_cast<double>(right)));
    const double ref = y[nearest];
    double acc = 0.0;
    for (std::size_t j = left; j <= right; ++j) acc += w[j - left] * (y[j] - ref);
    return ref + acc;
}

std::vector<double> robustness_weights(std::span<const double> residuals) {
    std::vector<double> mag(residuals.size());
    std::transform(residuals.begin(), residuals.end(), mag.begin(), [](double r) { return std::abs(r); });
    std::vector<double> sorted = mag;
    const std::size_t n = sorted.size();
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
    double median = sorted[n / 2];
    if (n % 2 == 0) {
        const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2));
        median = 0.5 * (median + lower);
    }
    const double cmad = 6.0 * median;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = mag[i];
        if (r <= 0.001 * cmad) {
            out[i] = 1.0;
        } else if (r > 0.999 * cmad) {
            out[i] = 0.0;
        } else {
            const double u = r / cmad;
            out[i] = (1.0 - u * u) * (1.0 - u * u);
        }
    }
    return out;
}

std::vector<double> loess_smooth(std::span<const double> values, const LoessParams& params) {
    params.validate();
    if (values.size() < params.span) {
        throw std::invalid_argument(
            fmt::format("loess_smooth: series length {} shorter than span {}", values.size(), params.span));
    }
    auto fit = smooth_all(values, params.span, params.degree, {});
    for (std::size_t it = 0; it < params.robustness_iters; ++it) {
        std::vector<double> resid(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) resid[i] = values[i] - fit[i];
        const auto rw = robustness_weights(resid);
        fit = smooth_all(values, params.span, params.degree, rw);
    }
    return fit;
}

std::size_t StlParams::resolved_trend_span(std::size_t period) const {
    if (trend_span != 0) return trend_span;
    const double p = static_cast<double>(period);
    return next_odd_at_least(1.5 * p / (1.0 - 1.5 / static_cast<double>(seasonal_span)));
}

std::size_t StlParams::resolved_lowpass_span(std::size_t period) const {
    return lowpass_span != 0 ? lowpass_span : next_odd_at_least(static_cast<double>(period));
}

StlResult stl_decompose(std::span<const double> values, std::size_t period, const StlParams& params) {
    const std::size_t n = values.size();
    if (period < 2) throw std::invalid_argument("stl_decompose: period must be >= 2");
    if (n < 2 * period) {
        throw std::invalid_argument(
            fmt::format("stl_decompose: length {} shorter than two periods ({})", n, 2 * period));
    }
    check_degree(params.seasonal_degree);
    check_degree(params.trend_degree);
    check_degree(params.lowpass_degree);
    if (params.seasonal_span < 3 || params.seasonal_span % 2 == 0) {
        throw std::invalid_argument("stl_decompose: seasonal span must be odd and >= 3");
    }
    if (params.inner_iters < 1 || params.outer_iters < 1) {
        throw std::invalid_argument("stl_decompose: inner and outer iteration counts must be >= 1");
    }
    const std::size_t ns = params.seasonal_span;
    const std::size_t nt = params.resolved_trend_span(period);
    const std::size_t nl = params.resolved_lowpass_span(period);

    StlResult out;
    out.trend.assign(n, 0.0);
    out.seasonal.assign(n, 0.0);
    std::vector<double> rw;  // empty: unit weights
    std::vector<double> detrended(n);
    std::vector<double> cycle(n + 2 * period);
    std::vector<double> sub;
    std::vector<double> sub_rw;

    for (std::size_t outer = 0; outer < params.outer_iters; ++outer) {
        for (std::size_t inner = 0; inner < params.inner_iters; ++inner) {
            for (std::size_t i = 0; i < n; ++i) detrended[i] = values[i] - out.trend[i];

            // Cycle-subseries smoothing, extrapolated one step past each end.
            for (std::size_t j = 0; j < period; ++j) {
                sub.clear();
                sub_rw.clear();
                for (std::size_t i = j; i < n; i += period) {
                    sub.push_back(detrended[i]);
                    if (!rw.empty()) sub_rw.push_back(rw[i]);
                }
                const std::size_t m = sub.size();
                const auto smoothed = smooth_all(sub, ns, params.seasonal_degree, sub_rw);
                for (std::size_t k = 0; k < m; ++k) cycle[(k + 1) * period + j] = smoothed[k];

                const std::size_t right_edge = std::min(ns, m) - 1;
                const auto lo = loess_point(sub, -1.0, 0, right_edge, ns, params.seasonal_degree, sub_rw);
                cycle[j] = lo ? *lo : smoothed.front();
                const std::size_t left_edge = m > ns ? m - ns : 0;
                const auto hi = loess_point(sub, static_cast<double>(m), left_edge, m - 1, ns,
                                            params.seasonal_degree, sub_rw);
                cycle[(m + 1) * period + j] = hi ? *hi : smoothed.back();
            }

            // Low-pass filter of the cycle-subseries.
            auto lp = moving_average(moving_average(moving_average(cycle, period), period), 3);
            lp = smooth_all(lp, nl, params.lowpass_degree, {});

            for (std::size_t i = 0; i < n; ++i) out.seasonal[i] = cycle[period + i] - lp[i];

            std::vector<double> deseason(n);
            for (std::size_t i = 0; i < n; ++i) deseason[i] = values[i] - out.seasonal[i];
            out.trend = smooth_all(deseason, nt, params.trend_degree, rw);
        }
        if (outer + 1 < params.outer_iters) {
            std::vector<double> resid(n);
            for (std::size_t i = 0; i < n; ++i) resid[i] = values[i] - out.trend[i] - out.seasonal[i];
            rw = robustness_weights(resid);
        }
    }

    out.remainder.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.remainder[i] = values[i] - out.trend[i] - out.seasonal[i];
    return out;
}

MstlDecomposition mstl_decompose(std::span<const double> values, const std::vector<std::size_t>& periods,
                                 const MstlParams& params) {
    const std::size_t n = values.size();
    if (n == 0) throw std::invalid_argument("mstl_decompose: empty series");
    for (std::size_t k = 0; k < periods.size(); ++k) {
        if (periods[k] < 2) throw std::invalid_argument("mstl_decompose: periods must be >= 2");
        if (k > 0 && periods[k] == periods[k - 1]) {
            throw std::invalid_argument(fmt::format("mstl_decompose: duplicate period {}", periods[k]));
        }
        if (k > 0 && periods[k] < periods[k - 1]) {
            throw std::invalid_argument("mstl_decompose: periods must be strictly ascending");
        }
    }
    if (!periods.empty() && n < 2 * periods.back()) {
        throw std::invalid_argument(
            fmt::format("mstl_decompose: length {} shorter than two periods of {}", n, periods.back()));
    }

    MstlDecomposition out;
    std::vector<double> working(values.begin(), values.end());
    if (periods.empty()) {
        std::size_t span = params.nonseasonal_trend_span;
        if (span == 0) span = next_odd_at_least(static_cast<double>(n) / 2.0);
        out.trend = smooth_all(working, span, params.stl.trend_degree, {});
    }
    for (const std::size_t p : periods) {
        auto stl = stl_decompose(working, p, params.stl);
        for (std::size_t i = 0; i < n; ++i) working[i] -= stl.seasonal[i];
        out.trend = std::move(stl.trend);
        out.seasonal.emplace(p, std::move(stl.seasonal));
    }

    out.remainder.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double r = values[i] - out.trend[i];
        for (const auto& [p, s] : out.seasonal) r -= s[i];
        out.remainder[i] = r;
    }
    return out;
}

Forecast mstl_forecast(const WeeklySeries& series, const std::vector<std::size_t>& periods,
                       const MstlParams& params, const ForecastConfig& cfg) {
    if (cfg.horizon < 1) throw std::invalid_argument("mstl_forecast: horizon must be >= 1");
    const std::size_t n = series.size();
    const std::size_t max_period = periods.empty() ? 1 : *std::max_element(periods.begin(), periods.end());
    if (n < 2 * max_period + cfg.horizon || n < 2) {
        throw std::invalid_argument(fmt::format(
            "mstl_forecast: length {} shorter than 2 * max period + horizon ({})", n, 2 * max_period + cfg.horizon));
    }
    const auto y = series.values();
    const auto d = mstl_decompose(y, periods, params);

    std::vector<double> deseason(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = y[i];
        for (const auto& [p, s] : d.seasonal) v -= s[i];
        deseason[i] = v;
    }
    const double last = deseason.back();
    const double drift = (deseason.back() - deseason.front()) / static_cast<double>(n - 1);

    Forecast f{"mstl", std::vector<double>(cfg.horizon), series.week(n)};
    for (std::size_t h = 0; h < cfg.horizon; ++h) {
        double v = last + static_cast<double>(h + 1) * drift;
        for (const auto& [p, s] : d.seasonal) v += s[n - p + (h % p)];
        f.values[h] = std::max(0.0, v);
    }
    return f;
}

void write_decomposition_csv(std::ostream& out, std::span<const double> input, const MstlDecomposition& d) {
    out << "t,input,trend";
    for (const auto& [p, s] : d.seasonal) out << ",seasonal_" << p;
    out << ",remainder\n";
    for (std::size_t i = 0; i < input.size(); ++i) {
        out << i << ',' << fmt::format("{:.6f},{:.6f}", input[i], d.trend[i]);
        for (const auto& [p, s] : d.seasonal) out << fmt::format(",{:.6f}", s[i]);
        out << fmt::format(",{:.6f}\n", d.remainder[i]);
    }
}

}  // namespace shipcast::decomp
