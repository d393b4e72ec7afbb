#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shipcast/rng.hpp"

namespace shipcast::nn {

enum class Activation { Identity, Relu };

/// Affine map followed by an activation. Weights are row-major out x in.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    Activation activation = Activation::Identity;
};

/// Feed-forward stack of dense layers.
///
/// Each instance carries an identity and a parameter version; a Tape records
/// both so backward() can refuse tapes from another network or from before a
/// parameter update. Copies receive a fresh identity.
class DenseNet {
public:
    DenseNet() = default;
    explicit DenseNet(std::vector<DenseLayer> layers);
    DenseNet(const DenseNet& other);
    DenseNet& operator=(const DenseNet& other);
    DenseNet(DenseNet&&) noexcept = default;
    DenseNet& operator=(DenseNet&&) noexcept = default;

    /// Layer widths dims[0] -> dims[1] -> ... with Xavier-uniform weights
    /// in +-sqrt(6 / (fan_in + fan_out)) and zero biases.
    static DenseNet xavier(std::span<const std::size_t> dims, Activation hidden, Activation output,
                           SplitMix64& rng);

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    /// Mutable access invalidates outstanding tapes.
    std::vector<DenseLayer>& mutable_layers() noexcept {
        ++version_;
        return layers_;
    }
    void touch() noexcept { ++version_; }

    std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().in; }
    std::size_t output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().out; }
    std::size_t parameter_count() const noexcept;
    std::uint64_t id() const noexcept { return id_; }
    std::uint64_t version() const noexcept { return version_; }

private:
    static std::uint64_t next_id() noexcept;

    std::vector<DenseLayer> layers_;
    std::uint64_t id_ = next_id();
    std::uint64_t version_ = 0;
};

/// Activations cached by forward(): inputs[k] is the input of layer k and
/// pre[k] its pre-activation.
struct Tape {
    std::uint64_t net_id = 0;
    std::uint64_t net_version = 0;
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> pre;
};

struct ForwardResult {
    std::vector<double> output;
    Tape tape;
};

ForwardResult forward(const DenseNet& net, std::span<const double> x);
/// Forward without recording a tape.
std::vector<double> infer(const DenseNet& net, std::span<const double> x);

struct LayerGrad {
    std::vector<double> weights;
    std::vector<double> bias;
};

/// Gradients shaped exactly like a DenseNet.
struct GradientSet {
    std::vector<LayerGrad> layers;

    static GradientSet zeros_like(const DenseNet& net);
    void set_zero() noexcept;
    void scale(double factor) noexcept;
};

struct BackwardResult {
    GradientSet grads;
    std::vector<double> input_grad;
};

/// Reverse-mode pass for a scalar loss whose gradient w.r.t. the output is
/// `output_grad`. Throws std::logic_error on a stale or foreign tape.
BackwardResult backward(const DenseNet& net, const Tape& tape, std::span<const double> output_grad);

/// Same as backward() but adds the parameter gradients into `acc` and returns
/// the input gradient.
std::vector<double> backward_accumulate(const DenseNet& net, const Tape& tape, std::span<const double> output_grad,
                                        GradientSet& acc);

}  // namespace shipcast::nn
