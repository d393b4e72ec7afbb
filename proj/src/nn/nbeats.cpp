#include "shipcast/nn/nbeats.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace shipcast::nn {

std::string BasisSpec::label() const {
    switch (kind) {
        case BasisKind::Generic: return "generic";
        case BasisKind::Polynomial: return fmt::format("polynomial({})", degree);
        case BasisKind::Fourier: return fmt::format("fourier({})", harmonics);
    }
    return "?";
}

std::size_t BasisSpec::theta_dim(std::size_t length) const {
    switch (kind) {
        case BasisKind::Generic: return length;
        case BasisKind::Polynomial: return static_cast<std::size_t>(degree) + 1;
        case BasisKind::Fourier: return 2 * static_cast<std::size_t>(harmonics) + 1;
    }
    return 0;
}

namespace {

Matrix basis_for(const BasisSpec& spec, std::size_t len) {
    const std::size_t cols = spec.theta_dim(len);
    Matrix m{len, cols, std::vector<double>(len * cols, 0.0)};
    for (std::size_t j = 0; j < len; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(len);
        if (spec.kind == BasisKind::Polynomial) {
            double p = 1.0;
            for (std::size_t c = 0; c < cols; ++c, p *= t) m.data[j * cols + c] = p;
        } else {
            m.data[j * cols] = 1.0;
            for (int k = 1; k <= spec.harmonics; ++k) {
                const double arg = 2.0 * std::numbers::pi * k * t;
                m.data[j * cols + 2 * k - 1] = std::cos(arg);
                m.data[j * cols + 2 * k] = std::sin(arg);
            }
        }
    }
    return m;
}

}  // namespace

BasisMatrices basis_matrices(const BasisSpec& spec, std::size_t lookback, std::size_t horizon) {
    if (lookback == 0 || horizon == 0) throw std::invalid_argument("basis_matrices: L and H must be >= 1");
    switch (spec.kind) {
        case BasisKind::Generic:
            return {Matrix::identity(lookback), Matrix::identity(horizon)};
        case BasisKind::Polynomial:
            if (spec.degree < 0) throw std::invalid_argument("basis_matrices: polynomial degree must be >= 0");
            break;
        case BasisKind::Fourier:
            if (spec.harmonics < 1) throw std::invalid_argument("basis_matrices: harmonics must be >= 1");
            if (static_cast<std::size_t>(spec.harmonics) > horizon / 2 ||
                static_cast<std::size_t>(spec.harmonics) > lookback / 2) {
                throw std::invalid_argument(fmt::format(
                    "basis_matrices: {} harmonics exceed the Nyquist bound (floor(H/2) = {}, floor(L/2) = {})",
                    spec.harmonics, horizon / 2, lookback / 2));
            }
            break;
    }
    return {basis_for(spec, lookback), basis_for(spec, horizon)};
}

NBeatsArchitecture NBeatsArchitecture::generic_default() {
    NBeatsArchitecture a;
    a.stacks.assign(3, NBeatsStackSpec{BasisSpec::generic(), 1, false, {32, 32, 32, 32}});
    return a;
}

NBeatsArchitecture NBeatsArchitecture::interpretable_default() {
    NBeatsArchitecture a;
    a.stacks.push_back(NBeatsStackSpec{BasisSpec::polynomial(2), 3, true, {32, 32, 32, 32}});
    a.stacks.push_back(NBeatsStackSpec{BasisSpec::fourier(2), 3, true, {32, 32, 32, 32}});
    return a;
}

ResidualModel make_nbeats(const NBeatsArchitecture& arch, const ForecastConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (arch.stacks.empty()) throw std::invalid_argument("make_nbeats: architecture has no stacks");
    const std::size_t L = cfg.lookback;
    const std::size_t H = cfg.horizon;
    SplitMix64 rng(seed);
    std::vector<Stack> stacks;
    for (std::size_t s = 0; s < arch.stacks.size(); ++s) {
        const auto& spec = arch.stacks[s];
        if (spec.blocks == 0) throw std::invalid_argument("make_nbeats: stack needs at least one block");
        const auto basis = basis_matrices(spec.basis, L, H);
        Stack stack;
        stack.name = fmt::format("{}_{}", spec.basis.kind == BasisKind::Generic ? "generic"
                                          : spec.basis.kind == BasisKind::Polynomial ? "trend"
                                                                                     : "seasonality",
                                 s);
        stack.shared = spec.share_weights;
        stack.depth = spec.blocks;
        const std::size_t built = spec.share_weights ? 1 : spec.blocks;
        for (std::size_t b = 0; b < built; ++b) {
            Block block;
            block.theta_backcast = spec.basis.theta_dim(L);
            block.theta_forecast = spec.basis.theta_dim(H);
            std::vector<std::size_t> dims{L};
            dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
            dims.push_back(block.theta_backcast + block.theta_forecast);
            block.trunk = DenseNet::xavier(dims, Activation::Relu, Activation::Identity, rng);
            if (spec.basis.kind == BasisKind::Generic) {
                const std::size_t bd[] = {block.theta_backcast, L};
                const std::size_t fd[] = {block.theta_forecast, H};
                LearnedHead head{DenseNet::xavier(bd, Activation::Identity, Activation::Identity, rng),
                                 DenseNet::xavier(fd, Activation::Identity, Activation::Identity, rng)};
                block.head = std::move(head);
            } else {
                block.head = FixedHead{basis.backcast, basis.forecast};
            }
            block.basis = spec.basis.label();
            stack.blocks.push_back(std::move(block));
        }
        stacks.push_back(std::move(stack));
    }
    return ResidualModel("nbeats", L, H, std::move(stacks));
}

FitResult nbeats_train(std::span<const double> train_values, const ForecastConfig& cfg,
                       const NBeatsArchitecture& arch, const TrainConfig& train_cfg) {
    return fit_model(make_nbeats(arch, cfg, train_cfg.seed), train_values, train_cfg);
}

}  // namespace shipcast::nn
