#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shipcast/nn/dense.hpp"
#include "shipcast/series.hpp"

namespace shipcast::nn {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t max_epochs = 500;
    std::size_t batch_size = 16;
    std::size_t patience = 30;
    /// Epochs before validation loss is tracked; none of them can be the
    /// restored best, and none count toward patience.
    std::size_t warmup_epochs = 50;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

/// First and second moment estimates for a list of parameter slots.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step = 0;

    static AdamState for_sizes(std::span<const std::size_t> sizes);
    static AdamState for_net(const DenseNet& net);
};

/// One Adam update with bias correction over parallel slot lists.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, const TrainConfig& cfg);

/// DenseNet convenience overload; slots are (weights, bias) per layer.
void adam_step(DenseNet& net, const GradientSet& grads, AdamState& state, const TrainConfig& cfg);

/// A model the trainer can fit. Inputs and targets are already normalised.
class Trainable {
public:
    virtual ~Trainable() = default;

    virtual std::size_t input_size() const = 0;
    virtual std::size_t output_size() const = 0;
    virtual std::vector<double> predict(std::span<const double> x) const = 0;
    /// Runs forward and backward on one window and adds `scale` times the
    /// gradient of the window MSE into the gradient buffers. Returns the MSE.
    virtual double accumulate(std::span<const double> x, std::span<const double> y, double scale) = 0;
    virtual void zero_gradients() = 0;
    /// Parameter and gradient slots, index-aligned.
    virtual std::vector<std::span<double>> parameters() = 0;
    virtual std::vector<std::span<const double>> gradients() const = 0;
    /// Called after every parameter update.
    virtual void parameters_changed() = 0;
};

/// Window scale used for training and inference: mean(lookback) + 1.
double window_scale(std::span<const double> lookback);

struct TrainingHistory {
    double initial_train_loss = 0.0;
    std::vector<double> train_loss;  // mean window MSE per epoch (normalised units)
    std::vector<double> val_loss;    // empty when no validation windows
    std::size_t best_epoch = 0;
    bool early_stopped = false;
};

/// Mini-batch Adam on window-normalised MSE. Batches follow a SplitMix64
/// shuffle seeded from cfg.seed. With validation windows, training stops
/// after `patience` epochs without improvement and the best parameters are
/// restored.
TrainingHistory train(Trainable& model, std::span<const Window> train_windows, std::span<const Window> val_windows,
                      const TrainConfig& cfg);

struct WindowSplit {
    std::vector<Window> train;
    std::vector<Window> validation;
};

/// Holds out the last 2H weeks: training windows lie entirely before them,
/// validation windows have targets inside them.
WindowSplit split_for_validation(std::span<const double> values, const ForecastConfig& cfg);

/// De-normalised prediction from the last L values.
std::vector<double> predict_window(const Trainable& model, std::span<const double> lookback);

}  // namespace shipcast::nn
