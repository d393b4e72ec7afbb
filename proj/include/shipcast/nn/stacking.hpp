#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "shipcast/nn/dense.hpp"
#include "shipcast/nn/train.hpp"
#include "shipcast/series.hpp"

namespace shipcast::nn {

/// Constant row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    static Matrix identity(std::size_t n);
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::vector<double> apply(std::span<const double> x) const;
    std::vector<double> apply_transpose(std::span<const double> g) const;
};

/// Theta is projected through fixed basis matrices (polynomial, Fourier,
/// interpolation).
struct FixedHead {
    Matrix backcast;  // L x theta_backcast
    Matrix forecast;  // H x theta_forecast
};

/// Theta is projected through learned linear layers (generic basis).
struct LearnedHead {
    DenseNet backcast;  // theta_backcast -> L
    DenseNet forecast;  // theta_forecast -> H
};

/// pool -> trunk MLP -> theta = [theta_b, theta_f] -> head.
/// pool_kernel 1 disables pooling.
struct Block {
    std::size_t pool_kernel = 1;
    std::size_t theta_backcast = 0;
    std::size_t theta_forecast = 0;
    DenseNet trunk;
    std::variant<FixedHead, LearnedHead> head;
    std::string basis;  // descriptive label, e.g. "generic", "polynomial(2)"
};

/// Blocks of one stack. When `shared` is set a single block is applied
/// `depth` times with tied weights; otherwise every block is applied once.
struct Stack {
    std::string name;
    std::vector<Block> blocks;
    bool shared = false;
    std::size_t depth = 1;

    std::size_t applications() const noexcept { return shared ? depth : blocks.size(); }
    const Block& block_for(std::size_t k) const { return shared ? blocks.front() : blocks[k]; }
};

struct BlockOutput {
    std::vector<double> backcast;
    std::vector<double> forecast;
};

/// One block on a length-L residual.
BlockOutput block_apply(const Block& block, std::span<const double> x, std::size_t lookback, std::size_t horizon);

/// Max over consecutive windows of `kernel`; the tail is padded with the last value.
std::vector<double> maxpool1d(std::span<const double> x, std::size_t kernel);

struct BlockTrace {
    std::size_t stack = 0;
    std::size_t position = 0;  // application index within the stack
    std::vector<double> input;
    std::vector<double> backcast;
    std::vector<double> forecast;
    std::vector<double> residual;  // input - backcast
};

struct ModelOutput {
    std::vector<double> forecast;
    std::vector<BlockTrace> diagnostics;
};

/// Doubly residual stacking shared by N-BEATS and N-HiTS:
/// r_0 = x, (b_k, f_k) = block_k(r_{k-1}), r_k = r_{k-1} - b_k, forecast = sum f_k.
class ResidualModel final : public Trainable {
public:
    ResidualModel() = default;
    ResidualModel(std::string kind, std::size_t lookback, std::size_t horizon, std::vector<Stack> stacks);

    const std::string& kind() const noexcept { return kind_; }
    std::size_t lookback() const noexcept { return lookback_; }
    std::size_t horizon() const noexcept { return horizon_; }
    const std::vector<Stack>& stacks() const noexcept { return stacks_; }
    /// Structural or parameter edits; invalidates gradient buffers.
    std::vector<Stack>& mutable_stacks();

    ModelOutput apply(std::span<const double> x) const;

    std::size_t input_size() const override { return lookback_; }
    std::size_t output_size() const override { return horizon_; }
    std::vector<double> predict(std::span<const double> x) const override;
    double accumulate(std::span<const double> x, std::span<const double> y, double scale) override;
    void zero_gradients() override;
    std::vector<std::span<double>> parameters() override;
    std::vector<std::span<const double>> gradients() const override;
    void parameters_changed() override;

    std::size_t parameter_count() const;

private:
    struct BlockGrads {
        GradientSet trunk;
        GradientSet back;
        GradientSet fore;
    };
    void validate() const;
    void ensure_gradients();

    std::string kind_;
    std::size_t lookback_ = 0;
    std::size_t horizon_ = 0;
    std::vector<Stack> stacks_;
    std::vector<std::vector<BlockGrads>> grads_;
};

/// Forecast for the weeks following `history` from its last L values, clamped at 0.
Forecast forecast_next(const ResidualModel& model, const WeeklySeries& history, std::string label);

/// Long-format CSV: application,stack,position,component,index,value.
void write_diagnostics_csv(std::ostream& out, const ResidualModel& model, const ModelOutput& output);

struct FitResult {
    ResidualModel model;
    TrainingHistory history;
};

/// Validation split of the training series, then train().
FitResult fit_model(ResidualModel model, std::span<const double> train_values, const TrainConfig& cfg);

}  // namespace shipcast::nn
