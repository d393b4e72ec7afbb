#include "shipcast/nn/dense.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace shipcast::nn {

std::uint64_t DenseNet::next_id() noexcept {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& l = layers_[k];
        if (l.in == 0 || l.out == 0) throw std::invalid_argument(fmt::format("DenseNet: layer {} has a zero dimension", k));
        if (l.weights.size() != l.in * l.out || l.bias.size() != l.out) {
            throw std::invalid_argument(fmt::format("DenseNet: layer {} parameter sizes do not match {}x{}", k, l.out, l.in));
        }
        if (k > 0 && layers_[k - 1].out != l.in) {
            throw std::invalid_argument(
                fmt::format("DenseNet: layer {} input {} does not chain from output {}", k, l.in, layers_[k - 1].out));
        }
    }
}

DenseNet::DenseNet(const DenseNet& other) : layers_(other.layers_), id_(next_id()), version_(0) {}

DenseNet& DenseNet::operator=(const DenseNet& other) {
    if (this != &other) {
        layers_ = other.layers_;
        id_ = next_id();
        version_ = 0;
    }
    return *this;
}

DenseNet DenseNet::xavier(std::span<const std::size_t> dims, Activation hidden, Activation output, SplitMix64& rng) {
    if (dims.size() < 2) throw std::invalid_argument("DenseNet::xavier: need at least input and output widths");
    std::vector<DenseLayer> layers;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        DenseLayer l;
        l.in = dims[k];
        l.out = dims[k + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
        l.weights.resize(l.in * l.out);
        for (auto& w : l.weights) w = rng.uniform(-limit, limit);
        l.bias.assign(l.out, 0.0);
        l.activation = (k + 2 == dims.size()) ? output : hidden;
        layers.push_back(std::move(l));
    }
    return DenseNet(std::move(layers));
}

std::size_t DenseNet::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

namespace {

void affine(const DenseLayer& l, std::span<const double> x, std::vector<double>& z) {
    z.resize(l.out);
    const double* w = l.weights.data();
    for (std::size_t o = 0; o < l.out; ++o, w += l.in) {
        double acc = l.bias[o];
        for (std::size_t i = 0; i < l.in; ++i) acc += w[i] * x[i];
        z[o] = acc;
    }
}

void activate(Activation a, std::vector<double>& v) {
    if (a == Activation::Relu) {
        for (auto& x : v) x = x > 0.0 ? x : 0.0;
    }
}

void check_input(const DenseNet& net, std::span<const double> x) {
    if (net.layers().empty()) throw std::invalid_argument("DenseNet: network has no layers");
    if (x.size() != net.input_dim()) {
        throw std::invalid_argument(
            fmt::format("DenseNet: input length {} does not match input dimension {}", x.size(), net.input_dim()));
    }
}

}  // namespace

ForwardResult forward(const DenseNet& net, std::span<const double> x) {
    check_input(net, x);
    ForwardResult r;
    r.tape.net_id = net.id();
    r.tape.net_version = net.version();
    const auto& layers = net.layers();
    r.tape.inputs.reserve(layers.size());
    r.tape.pre.reserve(layers.size());
    std::vector<double> cur(x.begin(), x.end());
    for (const auto& l : layers) {
        std::vector<double> z;
        affine(l, cur, z);
        r.tape.inputs.push_back(std::move(cur));
        cur = z;
        activate(l.activation, cur);
        r.tape.pre.push_back(std::move(z));
    }
    r.output = std::move(cur);
    return r;
}

std::vector<double> infer(const DenseNet& net, std::span<const double> x) {
    check_input(net, x);
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> z;
    for (const auto& l : net.layers()) {
        affine(l, cur, z);
        activate(l.activation, z);
        std::swap(cur, z);
    }
    return cur;
}

GradientSet GradientSet::zeros_like(const DenseNet& net) {
    GradientSet g;
    for (const auto& l : net.layers()) {
        g.layers.push_back(LayerGrad{std::vector<double>(l.weights.size(), 0.0), std::vector<double>(l.out, 0.0)});
    }
    return g;
}

void GradientSet::set_zero() noexcept {
    for (auto& l : layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
}

void GradientSet::scale(double factor) noexcept {
    for (auto& l : layers) {
        for (auto& w : l.weights) w *= factor;
        for (auto& b : l.bias) b *= factor;
    }
}

std::vector<double> backward_accumulate(const DenseNet& net, const Tape& tape, std::span<const double> output_grad,
                                        GradientSet& acc) {
    const auto& layers = net.layers();
    if (tape.net_id != net.id() || tape.net_version != net.version()) {
        throw std::logic_error("backward: tape was recorded on a different network or before a parameter update");
    }
    if (tape.inputs.size() != layers.size() || acc.layers.size() != layers.size()) {
        throw std::logic_error("backward: tape or gradient set does not match network depth");
    }
    if (output_grad.size() != net.output_dim()) {
        throw std::invalid_argument(fmt::format("backward: output gradient length {} does not match output dimension {}",
                                                output_grad.size(), net.output_dim()));
    }
    std::vector<double> grad(output_grad.begin(), output_grad.end());
    std::vector<double> next;
    for (std::size_t k = layers.size(); k-- > 0;) {
        const auto& l = layers[k];
        const auto& z = tape.pre[k];
        const auto& x = tape.inputs[k];
        if (l.activation == Activation::Relu) {
            for (std::size_t o = 0; o < l.out; ++o) {
                if (!(z[o] > 0.0)) grad[o] = 0.0;
            }
        }
        auto& g = acc.layers[k];
        next.assign(l.in, 0.0);
        const double* w = l.weights.data();
        double* gw = g.weights.data();
        for (std::size_t o = 0; o < l.out; ++o, w += l.in, gw += l.in) {
            const double go = grad[o];
            g.bias[o] += go;
            if (go == 0.0) continue;
            for (std::size_t i = 0; i < l.in; ++i) {
                gw[i] += go * x[i];
                next[i] += go * w[i];
            }
        }
        std::swap(grad, next);
    }
    return grad;
}

BackwardResult backward(const DenseNet& net, const Tape& tape, std::span<const double> output_grad) {
    BackwardResult r{GradientSet::zeros_like(net), {}};
    r.input_grad = backward_accumulate(net, tape, output_grad, r.grads);
    return r;
}

}  // namespace shipcast::nn
