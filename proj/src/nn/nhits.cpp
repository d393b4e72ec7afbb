#include "shipcast/nn/nhits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace shipcast::nn {
namespace {

// Segment index and weight of output position i.
std::pair<std::size_t, double> locate(std::size_t i, std::size_t knots, std::size_t out_len) {
    const double pos = static_cast<double>(i * (knots - 1)) / static_cast<double>(out_len - 1);
    const auto a = std::min(static_cast<std::size_t>(std::floor(pos)), knots - 2);
    return {a, pos - static_cast<double>(a)};
}

}  // namespace

std::vector<double> linear_interpolate(std::span<const double> knots, std::size_t out_len) {
    if (knots.empty()) throw std::invalid_argument("linear_interpolate: need at least one knot");
    if (out_len == 0) throw std::invalid_argument("linear_interpolate: out_len must be >= 1");
    const std::size_t m = knots.size();
    if (m == 1 || out_len == 1) return std::vector<double>(out_len, knots.front());
    std::vector<double> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        const auto [a, w] = locate(i, m, out_len);
        out[i] = (1.0 - w) * knots[a] + w * knots[a + 1];
    }
    return out;
}

Matrix interpolation_matrix(std::size_t knots, std::size_t out_len) {
    if (knots == 0 || out_len == 0) throw std::invalid_argument("interpolation_matrix: sizes must be >= 1");
    Matrix m{out_len, knots, std::vector<double>(out_len * knots, 0.0)};
    if (knots == 1 || out_len == 1) {
        for (std::size_t i = 0; i < out_len; ++i) m.data[i * knots] = 1.0;
        return m;
    }
    for (std::size_t i = 0; i < out_len; ++i) {
        const auto [a, w] = locate(i, knots, out_len);
        m.data[i * knots + a] = 1.0 - w;
        m.data[i * knots + a + 1] = w;
    }
    return m;
}

NhitsArchitecture NhitsArchitecture::default_for(const ForecastConfig& cfg) {
    NhitsArchitecture a;
    const std::size_t kernels[] = {4, 2, 1};
    const std::size_t knots[] = {1, 2, 4};
    for (std::size_t s = 0; s < 3; ++s) {
        NhitsStackConfig st;
        st.pool_kernel = std::min(kernels[s], cfg.lookback);
        st.forecast_knots = std::min(knots[s], cfg.horizon);
        a.stacks.push_back(st);
    }
    return a;
}

ResidualModel make_nhits(const NhitsArchitecture& arch, const ForecastConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (arch.stacks.empty()) throw std::invalid_argument("make_nhits: architecture has no stacks");
    const std::size_t L = cfg.lookback;
    const std::size_t H = cfg.horizon;
    SplitMix64 rng(seed);
    std::vector<Stack> stacks;
    for (std::size_t s = 0; s < arch.stacks.size(); ++s) {
        const auto& spec = arch.stacks[s];
        if (spec.pool_kernel == 0) throw std::invalid_argument("make_nhits: pool_kernel must be >= 1");
        if (spec.forecast_knots == 0 || spec.forecast_knots > H) {
            throw std::invalid_argument(fmt::format("make_nhits: forecast_knots {} must lie in [1, {}]", spec.forecast_knots, H));
        }
        if (spec.blocks == 0) throw std::invalid_argument("make_nhits: stack needs at least one block");
        const std::size_t pooled = (L + spec.pool_kernel - 1) / spec.pool_kernel;
        Stack stack;
        stack.name = fmt::format("pool{}_knots{}_{}", spec.pool_kernel, spec.forecast_knots, s);
        stack.depth = spec.blocks;
        for (std::size_t b = 0; b < spec.blocks; ++b) {
            Block block;
            block.pool_kernel = spec.pool_kernel;
            block.theta_backcast = pooled;
            block.theta_forecast = spec.forecast_knots;
            std::vector<std::size_t> dims{pooled};
            dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
            dims.push_back(pooled + spec.forecast_knots);
            block.trunk = DenseNet::xavier(dims, Activation::Relu, Activation::Identity, rng);
            block.head = FixedHead{interpolation_matrix(pooled, L), interpolation_matrix(spec.forecast_knots, H)};
            block.basis = "interpolation";
            stack.blocks.push_back(std::move(block));
        }
        stacks.push_back(std::move(stack));
    }
    return ResidualModel("nhits", L, H, std::move(stacks));
}

FitResult nhits_train(std::span<const double> train_values, const ForecastConfig& cfg, const NhitsArchitecture& arch,
                      const TrainConfig& train_cfg) {
    return fit_model(make_nhits(arch, cfg, train_cfg.seed), train_values, train_cfg);
}

}  // namespace shipcast::nn
