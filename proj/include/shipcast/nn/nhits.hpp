#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shipcast/nn/stacking.hpp"

namespace shipcast::nn {

/// Knots at equally spaced positions over [0, out_len - 1], endpoints
/// included, evaluated piecewise linearly. One knot gives a constant.
std::vector<double> linear_interpolate(std::span<const double> knots, std::size_t out_len);

/// out_len x knots matrix M with M * knots == linear_interpolate(knots, out_len).
Matrix interpolation_matrix(std::size_t knots, std::size_t out_len);

struct NhitsStackConfig {
    std::size_t pool_kernel = 1;
    std::size_t forecast_knots = 1;
    std::vector<std::size_t> hidden{32, 32, 32, 32};
    std::size_t blocks = 1;
};

struct NhitsArchitecture {
    std::vector<NhitsStackConfig> stacks;

    /// Pool kernels [4, 2, 1] with forecast knots [1, 2, 4] (capped at H).
    static NhitsArchitecture default_for(const ForecastConfig& cfg);
};

ResidualModel make_nhits(const NhitsArchitecture& arch, const ForecastConfig& cfg, std::uint64_t seed);

FitResult nhits_train(std::span<const double> train_values, const ForecastConfig& cfg, const NhitsArchitecture& arch,
                      const TrainConfig& train_cfg);

}  // namespace shipcast::nn
