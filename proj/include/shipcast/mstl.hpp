#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "shipcast/series.hpp"

namespace shipcast::decomp {

/// Span is the number of neighbours in each local fit (odd, >= degree + 2).
struct LoessParams {
    std::size_t span = 7;
    int degree = 1;  // 0 or 1
    std::size_t robustness_iters = 0;

    void validate() const;
};

/// Local polynomial fit evaluated at `xs` (index units, may lie outside the
/// data) from points [left, right] with tricube weights, optionally multiplied
/// by robustness weights. When `span` exceeds the number of points the
/// bandwidth grows by (span - npoints) / 2. Returns nullopt when every weight
/// vanishes.
std::optional<double> loess_point(std::span<const double> y, double xs, std::size_t left, std::size_t right,
                                  std::size_t span, int degree, std::span<const double> robustness = {});

/// LOESS at every index with `span` nearest neighbours. Throws when the
/// series is shorter than the span.
std::vector<double> loess_smooth(std::span<const double> values, const LoessParams& params);

/// Bisquare weights of residuals scaled by six times their median magnitude.
std::vector<double> robustness_weights(std::span<const double> residuals);

struct StlParams {
    std::size_t seasonal_span = 7;
    int seasonal_degree = 0;
    std::size_t trend_span = 0;    // 0: next odd >= 1.5 p / (1 - 1.5 / seasonal_span)
    int trend_degree = 1;
    std::size_t lowpass_span = 0;  // 0: next odd >= p
    int lowpass_degree = 1;
    std::size_t inner_iters = 2;
    std::size_t outer_iters = 1;  // 1: no robustness re-weighting

    std::size_t resolved_trend_span(std::size_t period) const;
    std::size_t resolved_lowpass_span(std::size_t period) const;
};

struct StlResult {
    std::vector<double> trend;
    std::vector<double> seasonal;
    std::vector<double> remainder;
};

/// Cleveland STL, additive. Requires length >= 2 * period and period >= 2.
StlResult stl_decompose(std::span<const double> values, std::size_t period, const StlParams& params = {});

struct MstlDecomposition {
    std::vector<double> trend;
    std::map<std::size_t, std::vector<double>> seasonal;
    std::vector<double> remainder;
};

struct MstlParams {
    StlParams stl;
    /// Trend LOESS span when no periods are given (0: next odd >= n / 2).
    std::size_t nonseasonal_trend_span = 0;
};

/// One STL pass per period in ascending order, each on the series with the
/// previously extracted seasonal components removed. Trend comes from the last
/// pass; remainder = input - trend - sum of seasonals.
MstlDecomposition mstl_decompose(std::span<const double> values, const std::vector<std::size_t>& periods,
                                 const MstlParams& params = {});
inline MstlDecomposition mstl_decompose(const WeeklySeries& s, const std::vector<std::size_t>& periods,
                                        const MstlParams& params = {}) {
    return mstl_decompose(s.values(), periods, params);
}

/// Seasonal-naive per component plus drift on the deseasonalised series,
/// clamped at zero.
Forecast mstl_forecast(const WeeklySeries& series, const std::vector<std::size_t>& periods,
                       const MstlParams& params, const ForecastConfig& cfg);

/// Columns: t,input,trend,seasonal_<p>...,remainder.
void write_decomposition_csv(std::ostream& out, std::span<const double> input, const MstlDecomposition& d);

}  // namespace shipcast::decomp
