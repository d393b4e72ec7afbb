#include "shipcast/nn/stacking.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace shipcast::nn {

Matrix Matrix::identity(std::size_t n) {
    Matrix m{n, n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) m.data[i * n + i] = 1.0;
    return m;
}

std::vector<double> Matrix::apply(std::span<const double> x) const {
    if (x.size() != cols) throw std::invalid_argument(fmt::format("Matrix::apply: expected {} inputs, got {}", cols, x.size()));
    std::vector<double> y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += data[r * cols + c] * x[c];
        y[r] = acc;
    }
    return y;
}

std::vector<double> Matrix::apply_transpose(std::span<const double> g) const {
    std::vector<double> out(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out[c] += data[r * cols + c] * g[r];
    }
    return out;
}

namespace {

std::size_t pooled_length(std::size_t n, std::size_t kernel) { return (n + kernel - 1) / kernel; }

// Pooled values plus, for each, the source index that won the max.
std::vector<double> pool_with_sources(std::span<const double> x, std::size_t kernel, std::vector<std::size_t>& src) {
    if (kernel == 0) throw std::invalid_argument("maxpool1d: kernel must be >= 1");
    if (x.empty()) throw std::invalid_argument("maxpool1d: empty input");
    const std::size_t n = x.size();
    const std::size_t m = pooled_length(n, kernel);
    std::vector<double> out(m);
    src.assign(m, 0);
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t best = std::min(k * kernel, n - 1);
        for (std::size_t j = k * kernel; j < (k + 1) * kernel; ++j) {
            const std::size_t idx = std::min(j, n - 1);
            if (x[idx] > x[best]) best = idx;
        }
        out[k] = x[best];
        src[k] = best;
    }
    return out;
}

struct BlockCache {
    std::vector<std::size_t> pool_src;
    Tape trunk;
    Tape back;
    Tape fore;
    BlockOutput out;
};

BlockCache block_forward(const Block& block, std::span<const double> x) {
    BlockCache c;
    std::vector<double> pooled;
    if (block.pool_kernel > 1) {
        pooled = pool_with_sources(x, block.pool_kernel, c.pool_src);
    } else {
        pooled.assign(x.begin(), x.end());
    }
    auto fr = forward(block.trunk, pooled);
    c.trunk = std::move(fr.tape);
    const std::span<const double> theta(fr.output);
    const auto tb = theta.first(block.theta_backcast);
    const auto tf = theta.subspan(block.theta_backcast, block.theta_forecast);
    if (const auto* fixed = std::get_if<FixedHead>(&block.head)) {
        c.out.backcast = fixed->backcast.apply(tb);
        c.out.forecast = fixed->forecast.apply(tf);
    } else {
        const auto& learned = std::get<LearnedHead>(block.head);
        auto b = forward(learned.backcast, tb);
        auto f = forward(learned.forecast, tf);
        c.out.backcast = std::move(b.output);
        c.out.forecast = std::move(f.output);
        c.back = std::move(b.tape);
        c.fore = std::move(f.tape);
    }
    return c;
}

void check_block(const Block& block, std::size_t lookback, std::size_t horizon) {
    const std::size_t pooled = block.pool_kernel > 1 ? pooled_length(lookback, block.pool_kernel) : lookback;
    if (block.pool_kernel == 0) throw std::invalid_argument("Block: pool_kernel must be >= 1");
    if (block.trunk.input_dim() != pooled) {
        throw std::invalid_argument(fmt::format("Block: trunk input {} does not match pooled length {}",
                                                block.trunk.input_dim(), pooled));
    }
    if (block.trunk.output_dim() != block.theta_backcast + block.theta_forecast) {
        throw std::invalid_argument("Block: trunk output does not match theta dimensions");
    }
    if (const auto* fixed = std::get_if<FixedHead>(&block.head)) {
        if (fixed->backcast.rows != lookback || fixed->backcast.cols != block.theta_backcast ||
            fixed->forecast.rows != horizon || fixed->forecast.cols != block.theta_forecast) {
            throw std::invalid_argument("Block: basis matrix shapes do not match L, H and theta");
        }
    } else {
        const auto& learned = std::get<LearnedHead>(block.head);
        if (learned.backcast.input_dim() != block.theta_backcast || learned.backcast.output_dim() != lookback ||
            learned.forecast.input_dim() != block.theta_forecast || learned.forecast.output_dim() != horizon) {
            throw std::invalid_argument("Block: learned head shapes do not match L, H and theta");
        }
    }
}

void push_slots(DenseNet& net, std::vector<std::span<double>>& out) {
    for (auto& l : net.mutable_layers()) {
        out.emplace_back(l.weights);
        out.emplace_back(l.bias);
    }
}

void push_grad_slots(const GradientSet& g, std::vector<std::span<const double>>& out) {
    for (const auto& l : g.layers) {
        out.emplace_back(l.weights);
        out.emplace_back(l.bias);
    }
}

}  // namespace

std::vector<double> maxpool1d(std::span<const double> x, std::size_t kernel) {
    std::vector<std::size_t> src;
    return pool_with_sources(x, kernel, src);
}

BlockOutput block_apply(const Block& block, std::span<const double> x, std::size_t lookback, std::size_t horizon) {
    if (x.size() != lookback) {
        throw std::invalid_argument(fmt::format("block_apply: input length {} does not match lookback {}", x.size(), lookback));
    }
    check_block(block, lookback, horizon);
    return block_forward(block, x).out;
}

ResidualModel::ResidualModel(std::string kind, std::size_t lookback, std::size_t horizon, std::vector<Stack> stacks)
    : kind_(std::move(kind)), lookback_(lookback), horizon_(horizon), stacks_(std::move(stacks)) {
    validate();
}

void ResidualModel::validate() const {
    if (lookback_ == 0 || horizon_ == 0) throw std::invalid_argument("ResidualModel: lookback and horizon must be >= 1");
    if (stacks_.empty()) throw std::invalid_argument("ResidualModel: at least one stack is required");
    for (const auto& s : stacks_) {
        if (s.blocks.empty()) throw std::invalid_argument(fmt::format("ResidualModel: stack '{}' has no blocks", s.name));
        if (s.shared && s.blocks.size() != 1) {
            throw std::invalid_argument(fmt::format("ResidualModel: shared stack '{}' must hold exactly one block", s.name));
        }
        if (s.shared && s.depth == 0) throw std::invalid_argument("ResidualModel: shared stack depth must be >= 1");
        for (const auto& b : s.blocks) check_block(b, lookback_, horizon_);
    }
}

std::vector<Stack>& ResidualModel::mutable_stacks() {
    grads_.clear();
    return stacks_;
}

ModelOutput ResidualModel::apply(std::span<const double> x) const {
    if (x.size() != lookback_) {
        throw std::invalid_argument(fmt::format("model_apply: input length {} does not match lookback {}", x.size(), lookback_));
    }
    ModelOutput out;
    out.forecast.assign(horizon_, 0.0);
    std::vector<double> residual(x.begin(), x.end());
    for (std::size_t s = 0; s < stacks_.size(); ++s) {
        const auto& stack = stacks_[s];
        for (std::size_t k = 0; k < stack.applications(); ++k) {
            auto c = block_forward(stack.block_for(k), residual);
            BlockTrace t;
            t.stack = s;
            t.position = k;
            t.input = residual;
            for (std::size_t i = 0; i < lookback_; ++i) residual[i] -= c.out.backcast[i];
            for (std::size_t h = 0; h < horizon_; ++h) out.forecast[h] += c.out.forecast[h];
            t.backcast = std::move(c.out.backcast);
            t.forecast = std::move(c.out.forecast);
            t.residual = residual;
            out.diagnostics.push_back(std::move(t));
        }
    }
    return out;
}

std::vector<double> ResidualModel::predict(std::span<const double> x) const { return apply(x).forecast; }

void ResidualModel::ensure_gradients() {
    if (!grads_.empty()) return;
    grads_.resize(stacks_.size());
    for (std::size_t s = 0; s < stacks_.size(); ++s) {
        for (const auto& b : stacks_[s].blocks) {
            BlockGrads g;
            g.trunk = GradientSet::zeros_like(b.trunk);
            if (const auto* learned = std::get_if<LearnedHead>(&b.head)) {
                g.back = GradientSet::zeros_like(learned->backcast);
                g.fore = GradientSet::zeros_like(learned->forecast);
            }
            grads_[s].push_back(std::move(g));
        }
    }
}

double ResidualModel::accumulate(std::span<const double> x, std::span<const double> y, double scale) {
    if (x.size() != lookback_ || y.size() != horizon_) throw std::invalid_argument("accumulate: window shape mismatch");
    ensure_gradients();

    struct Application {
        std::size_t stack;
        std::size_t block;
        BlockCache cache;
    };
    std::vector<Application> apps;
    std::vector<double> residual(x.begin(), x.end());
    std::vector<double> forecast(horizon_, 0.0);
    for (std::size_t s = 0; s < stacks_.size(); ++s) {
        const auto& stack = stacks_[s];
        for (std::size_t k = 0; k < stack.applications(); ++k) {
            auto c = block_forward(stack.block_for(k), residual);
            for (std::size_t i = 0; i < lookback_; ++i) residual[i] -= c.out.backcast[i];
            for (std::size_t h = 0; h < horizon_; ++h) forecast[h] += c.out.forecast[h];
            apps.push_back(Application{s, stack.shared ? 0 : k, std::move(c)});
        }
    }

    const double H = static_cast<double>(horizon_);
    double loss = 0.0;
    std::vector<double> df(horizon_);
    for (std::size_t h = 0; h < horizon_; ++h) {
        const double e = forecast[h] - y[h];
        loss += e * e;
        df[h] = scale * 2.0 * e / H;
    }

    // dL/dr_k flows backwards; the final residual feeds nothing.
    std::vector<double> dr(lookback_, 0.0);
    std::vector<double> db(lookback_);
    for (std::size_t a = apps.size(); a-- > 0;) {
        auto& app = apps[a];
        const Block& block = stacks_[app.stack].blocks[app.block];
        auto& g = grads_[app.stack][app.block];
        for (std::size_t i = 0; i < lookback_; ++i) db[i] = -dr[i];

        std::vector<double> dtheta;
        dtheta.reserve(block.theta_backcast + block.theta_forecast);
        if (const auto* fixed = std::get_if<FixedHead>(&block.head)) {
            const auto tb = fixed->backcast.apply_transpose(db);
            const auto tf = fixed->forecast.apply_transpose(df);
            dtheta.insert(dtheta.end(), tb.begin(), tb.end());
            dtheta.insert(dtheta.end(), tf.begin(), tf.end());
        } else {
            const auto& learned = std::get<LearnedHead>(block.head);
            const auto tb = backward_accumulate(learned.backcast, app.cache.back, db, g.back);
            const auto tf = backward_accumulate(learned.forecast, app.cache.fore, df, g.fore);
            dtheta.insert(dtheta.end(), tb.begin(), tb.end());
            dtheta.insert(dtheta.end(), tf.begin(), tf.end());
        }
        const auto dpooled = backward_accumulate(block.trunk, app.cache.trunk, dtheta, g.trunk);
        if (block.pool_kernel > 1) {
            for (std::size_t k = 0; k < dpooled.size(); ++k) dr[app.cache.pool_src[k]] += dpooled[k];
        } else {
            for (std::size_t i = 0; i < lookback_; ++i) dr[i] += dpooled[i];
        }
    }
    return loss / H;
}

void ResidualModel::zero_gradients() {
    ensure_gradients();
    for (auto& stack : grads_) {
        for (auto& g : stack) {
            g.trunk.set_zero();
            g.back.set_zero();
            g.fore.set_zero();
        }
    }
}

std::vector<std::span<double>> ResidualModel::parameters() {
    std::vector<std::span<double>> out;
    for (auto& stack : stacks_) {
        for (auto& b : stack.blocks) {
            push_slots(b.trunk, out);
            if (auto* learned = std::get_if<LearnedHead>(&b.head)) {
                push_slots(learned->backcast, out);
                push_slots(learned->forecast, out);
            }
        }
    }
    return out;
}

std::vector<std::span<const double>> ResidualModel::gradients() const {
    if (grads_.empty()) throw std::logic_error("gradients: no gradient buffers; call zero_gradients() first");
    std::vector<std::span<const double>> out;
    for (const auto& stack : grads_) {
        for (const auto& g : stack) {
            push_grad_slots(g.trunk, out);
            push_grad_slots(g.back, out);
            push_grad_slots(g.fore, out);
        }
    }
    return out;
}

void ResidualModel::parameters_changed() {
    for (auto& stack : stacks_) {
        for (auto& b : stack.blocks) {
            b.trunk.touch();
            if (auto* learned = std::get_if<LearnedHead>(&b.head)) {
                learned->backcast.touch();
                learned->forecast.touch();
            }
        }
    }
}

std::size_t ResidualModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& stack : stacks_) {
        for (const auto& b : stack.blocks) {
            n += b.trunk.parameter_count();
            if (const auto* learned = std::get_if<LearnedHead>(&b.head)) {
                n += learned->backcast.parameter_count() + learned->forecast.parameter_count();
            }
        }
    }
    return n;
}

Forecast forecast_next(const ResidualModel& model, const WeeklySeries& history, std::string label) {
    if (history.size() < model.lookback()) {
        throw std::invalid_argument(fmt::format("forecast_next: history of {} weeks shorter than lookback {}",
                                                history.size(), model.lookback()));
    }
    const auto tail = history.values().last(model.lookback());
    auto values = predict_window(model, tail);
    for (auto& v : values) v = std::max(0.0, v);
    return Forecast{std::move(label), std::move(values), history.week(history.size())};
}

void write_diagnostics_csv(std::ostream& out, const ResidualModel& model, const ModelOutput& output) {
    out << "application,stack,position,component,index,value\n";
    auto emit = [&](std::size_t a, const BlockTrace& t, const char* comp, const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            out << a << ',' << model.stacks()[t.stack].name << ',' << t.position << ',' << comp << ',' << i << ','
                << fmt::format("{:.6f}", v[i]) << '\n';
        }
    };
    for (std::size_t a = 0; a < output.diagnostics.size(); ++a) {
        const auto& t = output.diagnostics[a];
        emit(a, t, "input", t.input);
        emit(a, t, "backcast", t.backcast);
        emit(a, t, "forecast", t.forecast);
        emit(a, t, "residual", t.residual);
    }
}

FitResult fit_model(ResidualModel model, std::span<const double> train_values, const TrainConfig& cfg) {
    const ForecastConfig fc{model.lookback(), model.horizon()};
    const auto split = split_for_validation(train_values, fc);
    auto history = train(model, split.train, split.validation, cfg);
    return FitResult{std::move(model), std::move(history)};
}

}  // namespace shipcast::nn
