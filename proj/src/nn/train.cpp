#include "shipcast/nn/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "shipcast/rng.hpp"

namespace shipcast::nn {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("TrainConfig: beta1 and beta2 must lie in (0, 1)");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("TrainConfig: epsilon must be > 0");
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
}

AdamState AdamState::for_sizes(std::span<const std::size_t> sizes) {
    AdamState s;
    for (auto n : sizes) {
        s.m.emplace_back(n, 0.0);
        s.v.emplace_back(n, 0.0);
    }
    return s;
}

AdamState AdamState::for_net(const DenseNet& net) {
    std::vector<std::size_t> sizes;
    for (const auto& l : net.layers()) {
        sizes.push_back(l.weights.size());
        sizes.push_back(l.bias.size());
    }
    return for_sizes(sizes);
}

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, const TrainConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: parameter, gradient and state slot counts differ");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t s = 0; s < params.size(); ++s) {
        auto p = params[s];
        auto g = grads[s];
        auto& m = state.m[s];
        auto& v = state.v[s];
        if (p.size() != g.size() || p.size() != m.size()) {
            throw std::invalid_argument(fmt::format("adam_step: slot {} shape mismatch", s));
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
}

void adam_step(DenseNet& net, const GradientSet& grads, AdamState& state, const TrainConfig& cfg) {
    auto& layers = net.mutable_layers();
    if (grads.layers.size() != layers.size()) throw std::invalid_argument("adam_step: gradient depth mismatch");
    std::vector<std::span<double>> p;
    std::vector<std::span<const double>> g;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        p.emplace_back(layers[k].weights);
        p.emplace_back(layers[k].bias);
        g.emplace_back(grads.layers[k].weights);
        g.emplace_back(grads.layers[k].bias);
    }
    adam_step(p, g, state, cfg);
}

double window_scale(std::span<const double> lookback) {
    if (lookback.empty()) return 1.0;
    return std::accumulate(lookback.begin(), lookback.end(), 0.0) / static_cast<double>(lookback.size()) + 1.0;
}

namespace {

struct Normalised {
    std::vector<double> x;
    std::vector<double> y;
};

std::vector<Normalised> normalise(std::span<const Window> windows) {
    std::vector<Normalised> out;
    out.reserve(windows.size());
    for (const auto& w : windows) {
        const double s = window_scale(w.input);
        Normalised n;
        n.x.reserve(w.input.size());
        n.y.reserve(w.target.size());
        for (double v : w.input) n.x.push_back(v / s);
        for (double v : w.target) n.y.push_back(v / s);
        out.push_back(std::move(n));
    }
    return out;
}

double mean_loss(const Trainable& model, const std::vector<Normalised>& data) {
    if (data.empty()) return 0.0;
    double total = 0.0;
    for (const auto& d : data) {
        const auto f = model.predict(d.x);
        double se = 0.0;
        for (std::size_t h = 0; h < f.size(); ++h) se += (f[h] - d.y[h]) * (f[h] - d.y[h]);
        total += se / static_cast<double>(f.size());
    }
    return total / static_cast<double>(data.size());
}

std::vector<std::vector<double>> snapshot(Trainable& model) {
    std::vector<std::vector<double>> out;
    for (auto p : model.parameters()) out.emplace_back(p.begin(), p.end());
    return out;
}

void restore(Trainable& model, const std::vector<std::vector<double>>& saved) {
    auto params = model.parameters();
    for (std::size_t s = 0; s < params.size(); ++s) std::copy(saved[s].begin(), saved[s].end(), params[s].begin());
    model.parameters_changed();
}

}  // namespace

TrainingHistory train(Trainable& model, std::span<const Window> train_windows, std::span<const Window> val_windows,
                      const TrainConfig& cfg) {
    cfg.validate();
    if (train_windows.empty()) throw std::invalid_argument("train: no training windows");
    for (const auto& w : train_windows) {
        if (w.input.size() != model.input_size() || w.target.size() != model.output_size()) {
            throw std::invalid_argument("train: window shape does not match the model");
        }
    }

    const auto data = normalise(train_windows);
    const auto val = normalise(val_windows);

    std::vector<std::size_t> sizes;
    for (auto p : model.parameters()) sizes.push_back(p.size());
    AdamState state = AdamState::for_sizes(sizes);
    SplitMix64 rng(cfg.seed ^ 0x5eed5eed5eed5eedULL);

    TrainingHistory hist;
    hist.initial_train_loss = mean_loss(model, data);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_params;
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        deterministic_shuffle(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const double scale = 1.0 / static_cast<double>(end - start);
            model.zero_gradients();
            for (std::size_t b = start; b < end; ++b) {
                const auto& d = data[order[b]];
                epoch_loss += model.accumulate(d.x, d.y, scale);
            }
            auto params = model.parameters();
            auto grads = model.gradients();
            adam_step(params, grads, state, cfg);
            model.parameters_changed();
        }
        hist.train_loss.push_back(epoch_loss / static_cast<double>(data.size()));

        if (val.empty()) continue;
        const double vl = mean_loss(model, val);
        hist.val_loss.push_back(vl);
        if (epoch + 1 < cfg.warmup_epochs) continue;
        if (vl < best_val) {
            best_val = vl;
            hist.best_epoch = epoch;
            best_params = snapshot(model);
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            hist.early_stopped = true;
            break;
        }
    }
    if (!best_params.empty()) restore(model, best_params);
    if (val.empty()) hist.best_epoch = hist.train_loss.empty() ? 0 : hist.train_loss.size() - 1;
    return hist;
}

WindowSplit split_for_validation(std::span<const double> values, const ForecastConfig& cfg) {
    cfg.validate();
    const std::size_t n = values.size();
    const std::size_t L = cfg.lookback;
    const std::size_t H = cfg.horizon;
    const std::size_t hold = 2 * H;
    WindowSplit out;
    if (n < hold || n - hold < L + H) {
        out.train = sliding_windows(values, cfg);
        return out;
    }
    out.train = sliding_windows(values.first(n - hold), cfg);
    for (std::size_t target = n - hold; target + H <= n; ++target) {
        if (target < L) continue;
        const auto in = values.subspan(target - L, L);
        const auto tg = values.subspan(target, H);
        out.validation.push_back(Window{{in.begin(), in.end()}, {tg.begin(), tg.end()}});
    }
    return out;
}

std::vector<double> predict_window(const Trainable& model, std::span<const double> lookback) {
    if (lookback.size() != model.input_size()) {
        throw std::invalid_argument(fmt::format("predict_window: expected {} lookback values, got {}",
                                                model.input_size(), lookback.size()));
    }
    const double s = window_scale(lookback);
    std::vector<double> x(lookback.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = lookback[i] / s;
    auto f = model.predict(x);
    for (auto& v : f) v *= s;
    return f;
}

}  // namespace shipcast::nn
