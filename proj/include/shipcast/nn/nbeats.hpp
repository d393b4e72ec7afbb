#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shipcast/nn/stacking.hpp"

namespace shipcast::nn {

enum class BasisKind { Generic, Polynomial, Fourier };

struct BasisSpec {
    BasisKind kind = BasisKind::Generic;
    int degree = 0;     // polynomial
    int harmonics = 1;  // fourier

    static BasisSpec generic() { return {}; }
    static BasisSpec polynomial(int degree) { return {BasisKind::Polynomial, degree, 1}; }
    static BasisSpec fourier(int harmonics) { return {BasisKind::Fourier, 0, harmonics}; }

    std::string label() const;
    /// Theta length per direction: degree + 1, 2 * harmonics + 1, or L / H for generic.
    std::size_t theta_dim(std::size_t length) const;
};

struct BasisMatrices {
    Matrix backcast;  // L x theta_b
    Matrix forecast;  // H x theta_f
};

/// Polynomial columns t^0..t^d and Fourier columns 1, cos(2 pi k t), sin(2 pi k t)
/// on t = j / L (backcast) and t = j / H (forecast). Generic yields identities;
/// its real projection is the learned head. Throws past the Nyquist bound.
BasisMatrices basis_matrices(const BasisSpec& spec, std::size_t lookback, std::size_t horizon);

struct NBeatsStackSpec {
    BasisSpec basis;
    std::size_t blocks = 1;
    bool share_weights = false;
    std::vector<std::size_t> hidden{32, 32, 32, 32};
};

struct NBeatsArchitecture {
    std::vector<NBeatsStackSpec> stacks;

    /// 3 generic stacks x 1 block, trunk 4 x 32.
    static NBeatsArchitecture generic_default();
    /// Trend stack (degree 2) then seasonality stack (2 harmonics), 3 shared blocks each.
    static NBeatsArchitecture interpretable_default();
};

/// Freshly initialised model (Xavier weights from SplitMix64(seed)).
ResidualModel make_nbeats(const NBeatsArchitecture& arch, const ForecastConfig& cfg, std::uint64_t seed);

FitResult nbeats_train(std::span<const double> train_values, const ForecastConfig& cfg,
                       const NBeatsArchitecture& arch, const TrainConfig& train_cfg);

}  // namespace shipcast::nn
