#include "shipcast/nn/serialize.hpp"

#include <fmt/format.h>

#include "shipcast/error.hpp"

namespace shipcast::nn {
namespace {

using nlohmann::json;

json net_to_json(const DenseNet& net) {
    json layers = json::array();
    for (const auto& l : net.layers()) {
        layers.push_back({{"in", l.in},
                          {"out", l.out},
                          {"activation", l.activation == Activation::Relu ? "relu" : "identity"},
                          {"weights", l.weights},
                          {"bias", l.bias}});
    }
    return layers;
}

DenseNet net_from_json(const json& j) {
    std::vector<DenseLayer> layers;
    for (const auto& lj : j) {
        DenseLayer l;
        l.in = lj.at("in").get<std::size_t>();
        l.out = lj.at("out").get<std::size_t>();
        const auto act = lj.at("activation").get<std::string>();
        if (act == "relu") {
            l.activation = Activation::Relu;
        } else if (act == "identity") {
            l.activation = Activation::Identity;
        } else {
            throw DataError(fmt::format("model JSON: unknown activation '{}'", act));
        }
        l.weights = lj.at("weights").get<std::vector<double>>();
        l.bias = lj.at("bias").get<std::vector<double>>();
        layers.push_back(std::move(l));
    }
    return DenseNet(std::move(layers));
}

json matrix_to_json(const Matrix& m) { return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}}; }

Matrix matrix_from_json(const json& j) {
    Matrix m{j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(), j.at("data").get<std::vector<double>>()};
    if (m.data.size() != m.rows * m.cols) throw DataError("model JSON: matrix data does not match its shape");
    return m;
}

}  // namespace

json model_to_json(const ResidualModel& model) {
    json stacks = json::array();
    for (const auto& s : model.stacks()) {
        json blocks = json::array();
        for (const auto& b : s.blocks) {
            json head;
            if (const auto* fixed = std::get_if<FixedHead>(&b.head)) {
                head = {{"type", "fixed"},
                        {"backcast", matrix_to_json(fixed->backcast)},
                        {"forecast", matrix_to_json(fixed->forecast)}};
            } else {
                const auto& learned = std::get<LearnedHead>(b.head);
                head = {{"type", "learned"},
                        {"backcast", net_to_json(learned.backcast)},
                        {"forecast", net_to_json(learned.forecast)}};
            }
            blocks.push_back({{"pool_kernel", b.pool_kernel},
                              {"theta_backcast", b.theta_backcast},
                              {"theta_forecast", b.theta_forecast},
                              {"basis", b.basis},
                              {"trunk", net_to_json(b.trunk)},
                              {"head", std::move(head)}});
        }
        stacks.push_back({{"name", s.name}, {"shared", s.shared}, {"depth", s.depth}, {"blocks", std::move(blocks)}});
    }
    return {{"format", "shipcast.residual_model"},
            {"version", kModelFormatVersion},
            {"kind", model.kind()},
            {"lookback", model.lookback()},
            {"horizon", model.horizon()},
            {"stacks", std::move(stacks)}};
}

ResidualModel model_from_json(const json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "shipcast.residual_model") {
            throw DataError("model JSON: unexpected format tag");
        }
        const int version = doc.at("version").get<int>();
        if (version != kModelFormatVersion) throw DataError(fmt::format("model JSON: unsupported version {}", version));
        std::vector<Stack> stacks;
        for (const auto& sj : doc.at("stacks")) {
            Stack s;
            s.name = sj.at("name").get<std::string>();
            s.shared = sj.at("shared").get<bool>();
            s.depth = sj.at("depth").get<std::size_t>();
            for (const auto& bj : sj.at("blocks")) {
                Block b;
                b.pool_kernel = bj.at("pool_kernel").get<std::size_t>();
                b.theta_backcast = bj.at("theta_backcast").get<std::size_t>();
                b.theta_forecast = bj.at("theta_forecast").get<std::size_t>();
                b.basis = bj.at("basis").get<std::string>();
                b.trunk = net_from_json(bj.at("trunk"));
                const auto& hj = bj.at("head");
                const auto type = hj.at("type").get<std::string>();
                if (type == "fixed") {
                    b.head = FixedHead{matrix_from_json(hj.at("backcast")), matrix_from_json(hj.at("forecast"))};
                } else if (type == "learned") {
                    b.head = LearnedHead{net_from_json(hj.at("backcast")), net_from_json(hj.at("forecast"))};
                } else {
                    throw DataError(fmt::format("model JSON: unknown head type '{}'", type));
                }
                s.blocks.push_back(std::move(b));
            }
            stacks.push_back(std::move(s));
        }
        return ResidualModel(doc.at("kind").get<std::string>(), doc.at("lookback").get<std::size_t>(),
                             doc.at("horizon").get<std::size_t>(), std::move(stacks));
    } catch (const json::exception& e) {
        throw DataError(std::string("model JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("model JSON: ") + e.what());
    }
}

}  // namespace shipcast::nn
