#pragma once

#include <nlohmann/json.hpp>

#include "shipcast/nn/stacking.hpp"

namespace shipcast::nn {

inline constexpr int kModelFormatVersion = 1;

/// {"format": "shipcast.residual_model", "version": 1, "kind", "lookback",
///  "horizon", "stacks": [{"name", "shared", "depth", "blocks": [{"pool_kernel",
///  "theta_backcast", "theta_forecast", "basis", "trunk": [layer...],
///  "head": {"type": "fixed"|"learned", ...}}]}]}
/// Layers are {"in", "out", "activation", "weights" (row-major), "bias"}.
nlohmann::json model_to_json(const ResidualModel& model);

/// Throws DataError on an unknown format, version or inconsistent shapes.
ResidualModel model_from_json(const nlohmann::json& doc);

}  // namespace shipcast::nn
