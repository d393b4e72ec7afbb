#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "shipcast/mstl.hpp"

using namespace shipcast;
using namespace shipcast::decomp;

namespace {

// Weighted least squares of degree <= 1 at each point, solved from the normal
// equations with the same neighbourhood and tricube weights.
std::vector<double> loess_reference(const std::vector<double>& y, std::size_t span, int degree) {
    const std::size_t n = y.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t left = std::min(i > span / 2 ? i - span / 2 : 0, n - span);
        const std::size_t right = left + span - 1;
        const double h = std::max(double(i) - double(left), double(right) - double(i));
        double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
        for (std::size_t j = left; j <= right; ++j) {
            const double u = std::abs(double(j) - double(i)) / h;
            const double w = u < 1 ? std::pow(1 - u * u * u, 3) : 0.0;
            const double x = double(j) - double(i);
            s0 += w;
            s1 += w * x;
            s2 += w * x * x;
            t0 += w * y[j];
            t1 += w * x * y[j];
        }
        if (degree == 0) {
            out[i] = t0 / s0;
        } else {
            // Solve [s0 s1; s1 s2] [a b]' = [t0 t1]' and evaluate at x = 0.
            const auto sol = oracle::solve_dense({{s0, s1}, {s1, s2}}, {t0, t1});
            out[i] = (*sol)[0];
        }
    }
    return out;
}

std::vector<double> random_series(SplitMix64& rng, std::size_t n) {
    std::vector<double> y(n);
    for (auto& v : y) v = rng.uniform(-50, 150);
    return y;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void check_identity(const std::vector<double>& y, const MstlDecomposition& d) {
    for (std::size_t t = 0; t < y.size(); ++t) {
        double sum = d.trend[t] + d.remainder[t];
        for (const auto& [p, s] : d.seasonal) sum += s[t];
        REQUIRE(std::abs(sum - y[t]) <= 1e-9);
    }
}

}  // namespace

TEST_CASE("loess reproduces constants and lines") {
    const std::vector<double> c(25, 3.75);
    for (int degree : {0, 1}) {
        for (std::size_t span : {3u, 7u, 25u}) {
            LoessParams lp{span, degree, 0};
            if (span < static_cast<std::size_t>(degree) + 2) continue;
            CHECK(max_abs_diff(loess_smooth(c, lp), c) == 0.0);
        }
    }
    std::vector<double> line(30);
    for (std::size_t i = 0; i < line.size(); ++i) line[i] = 4.0 - 0.3 * double(i);
    CHECK(max_abs_diff(loess_smooth(line, {9, 1, 0}), line) <= 1e-9);
    CHECK(max_abs_diff(loess_smooth(line, {9, 1, 2}), line) <= 1e-9);
}

TEST_CASE("loess matches the normal-equations reference") {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto y = random_series(rng, 20);
        for (int degree : {0, 1}) {
            CHECK(max_abs_diff(loess_smooth(y, {7, degree, 0}), loess_reference(y, 7, degree)) <= 1e-9);
        }
    }
}

TEST_CASE("loess parameter validation") {
    const std::vector<double> y(5, 1.0);
    CHECK_THROWS_AS(loess_smooth(y, {7, 1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(loess_smooth(y, {4, 1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(loess_smooth(y, {3, 2, 0}), std::invalid_argument);
}

TEST_CASE("robustness weights down-weight outliers") {
    std::vector<double> r{0.1, -0.2, 0.15, -0.1, 50.0, 0.05};
    const auto w = robustness_weights(r);
    CHECK(w[4] == 0.0);
    CHECK(w[0] > 0.9);
    shipcast::SplitMix64 rng(3);
    std::vector<double> y(100);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 2.0 * double(i) + rng.uniform(-3, 3);
    y[20] += 60;
    const auto fit = loess_smooth(y, {11, 1, 3});
    CHECK(std::abs(fit[19] - 38.0) < 1.5);
    CHECK(std::abs(loess_smooth(y, {11, 1, 0})[19] - 38.0) > 8.0);
}

TEST_CASE("stl recovers a single sinusoid") {
    std::vector<double> y(120);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = 5.0 + 3.0 * std::sin(2 * std::numbers::pi * double(t) / 12.0);
    const auto r = stl_decompose(y, 12);
    for (std::size_t t = 0; t < y.size(); ++t) {
        CHECK(std::abs(r.seasonal[t] - (y[t] - 5.0)) <= 0.15);
        CHECK(std::abs(r.trend[t] - 5.0) <= 0.15);
    }
}

TEST_CASE("stl of zeros is zeros; length check") {
    const std::vector<double> z(30, 0.0);
    const auto r = stl_decompose(z, 4);
    CHECK(max_abs_diff(r.trend, z) == 0.0);
    CHECK(max_abs_diff(r.seasonal, z) == 0.0);
    CHECK(max_abs_diff(r.remainder, z) == 0.0);
    CHECK_THROWS_AS(stl_decompose(std::vector<double>(7, 1.0), 4), std::invalid_argument);
    CHECK_THROWS_AS(stl_decompose(z, 1), std::invalid_argument);
}

TEST_CASE("decomposition identity on random series; one period reduces to stl") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 110 + rng.index(100);
        const auto y = random_series(rng, n);
        StlParams sp;
        sp.outer_iters = 1 + rng.index(3);
        const auto d = mstl_decompose(y, {4, 52}, {sp, 0});
        check_identity(y, d);
        const auto one = mstl_decompose(y, {6}, {sp, 0});
        const auto ref = stl_decompose(y, 6, sp);
        CHECK(max_abs_diff(one.trend, ref.trend) == 0.0);
        CHECK(max_abs_diff(one.seasonal.at(6), ref.seasonal) == 0.0);
        CHECK(max_abs_diff(one.remainder, ref.remainder) == 0.0);
    }
}

TEST_CASE("mstl recovers two seasonal components and they are centred") {
    SyntheticSpec s;
    s.length = 208;
    s.base = 200;
    s.trend_slope = 0.5;
    s.seasonals = {{4, 20.0}, {52, 40.0}};
    const auto series = make_synthetic(s);
    MstlParams mp;
    mp.stl.inner_iters = 5;
    const auto d = mstl_decompose(series, {4, 52}, mp);
    for (std::size_t t = 0; t < 208; ++t) {
        const double tt = double(t);
        CHECK(std::abs(d.seasonal.at(4)[t] - 20.0 * std::sin(2 * std::numbers::pi * tt / 4)) <= 0.2);
        CHECK(std::abs(d.seasonal.at(52)[t] - 40.0 * std::sin(2 * std::numbers::pi * tt / 52)) <= 0.2);
    }
    for (const auto& [p, amp] : std::vector<std::pair<std::size_t, double>>{{4, 20.0}, {52, 40.0}}) {
        const auto& comp = d.seasonal.at(p);
        for (std::size_t k = 0; (k + 1) * p <= comp.size(); ++k) {
            double mean = 0;
            for (std::size_t t = k * p; t < (k + 1) * p; ++t) mean += comp[t];
            mean /= double(p);
            CHECK(std::abs(mean) <= 0.05 * amp);
        }
    }
    // The amplitude seen by a DFT of the extracted component matches too.
    CHECK(oracle::dft_amplitude(d.seasonal.at(52), 4) == doctest::Approx(40.0).epsilon(0.01));
}

TEST_CASE("mstl argument errors and the no-period case") {
    const std::vector<double> y(120, 2.0);
    CHECK_THROWS_AS(mstl_decompose(y, {4, 4}), std::invalid_argument);
    CHECK_THROWS_AS(mstl_decompose(y, {12, 4}), std::invalid_argument);
    CHECK_THROWS_AS(mstl_decompose(y, {61}), std::invalid_argument);
    const auto d = mstl_decompose(y, {});
    CHECK(d.seasonal.empty());
    check_identity(y, d);
    CHECK(max_abs_diff(d.trend, y) == 0.0);
}

TEST_CASE("mstl forecast examples") {
    const Date start{std::chrono::year{2020} / 1 / 6};
    ForecastConfig cfg;
    SUBCASE("periodic series repeats its last cycle") {
        std::vector<double> y(60);
        const double cyc[] = {10, 14, 9, 12};
        for (std::size_t t = 0; t < y.size(); ++t) y[t] = cyc[t % 4];
        const auto f = mstl_forecast(WeeklySeries(start, y), {4}, {}, cfg);
        for (std::size_t h = 0; h < 4; ++h) CHECK(std::abs(f.values[h] - cyc[h]) <= 0.2);
        CHECK(f.horizon_start_week == start + std::chrono::days{7 * 60});
    }
    SUBCASE("constant series") {
        const auto f = mstl_forecast(WeeklySeries(start, std::vector<double>(120, 7.5)), {4, 52}, {}, cfg);
        for (double v : f.values) CHECK(v == 7.5);
    }
    SUBCASE("ramp continues with its slope") {
        std::vector<double> y(50);
        for (std::size_t t = 0; t < y.size(); ++t) y[t] = 10.0 + 2.0 * double(t);
        const auto f = mstl_forecast(WeeklySeries(start, y), {}, {}, cfg);
        for (std::size_t h = 0; h < 4; ++h) CHECK(std::abs(f.values[h] - (10.0 + 2.0 * double(50 + h))) <= 0.1);
    }
    SUBCASE("too short") {
        CHECK_THROWS_AS(mstl_forecast(WeeklySeries(start, std::vector<double>(106, 1.0)), {4, 52}, {}, cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("decomposition CSV layout") {
    const std::vector<double> y(16, 1.0);
    const auto d = mstl_decompose(y, {4});
    std::ostringstream os;
    write_decomposition_csv(os, y, d);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header == "t,input,trend,seasonal_4,remainder");
    std::size_t rows = 0;
    for (std::string line; std::getline(is, line);) ++rows;
    CHECK(rows == 16);
}
