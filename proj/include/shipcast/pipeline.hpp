#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shipcast/ingest.hpp"
#include "shipcast/mstl.hpp"
#include "shipcast/nn/nbeats.hpp"
#include "shipcast/nn/nhits.hpp"
#include "shipcast/series.hpp"
#include "shipcast/shipping.hpp"

namespace shipcast::pipeline {

inline constexpr int kReportSchemaVersion = 1;

/// Labels in the fixed order used for tie-breaks and CSV columns.
inline constexpr std::array<std::string_view, 3> kModelOrder = {"mstl", "nbeats", "nhits"};

/// A pinned number or "from_eda".
struct ParamSource {
    std::optional<double> pinned;

    bool from_eda() const noexcept { return !pinned.has_value(); }
};

struct ModeParams {
    ParamSource t;
    ParamSource c;
    ParamSource K;
    bool is_fast = false;
};

struct IlpBlock {
    /// Indexed like ingest::kAllModes.
    std::array<ModeParams, 4> modes;
    double budget = 5500.0;
    double alpha = 0.10;
    /// Replaces the rounded forecast sum when set.
    std::optional<std::int64_t> demand;
    double headroom = 1.2;       // K from_eda = round(volume_share * D * headroom)
    double cost_fraction = 0.01; // c from_eda = mean unit price * cost_fraction
};

struct ModelSettings {
    nn::TrainConfig train;
    std::string nbeats_architecture = "generic";  // or "interpretable"
    nn::NhitsArchitecture nhits;                   // empty: default_for(forecast)
};

struct PipelineConfig {
    std::filesystem::path data_path;
    ingest::ColumnSchema schema;
    std::size_t drop_trailing_weeks = 0;
    std::size_t train_len = 158;
    ForecastConfig forecast;
    std::vector<std::size_t> mstl_periods{4, 52};
    decomp::MstlParams mstl;
    std::vector<std::string> models{"mstl", "nbeats", "nhits"};
    ModelSettings model;
    std::uint64_t seed = 42;
    IlpBlock ilp;
    std::filesystem::path output_dir = "out";

    /// Table 1 values pinned for every mode.
    static PipelineConfig defaults();
    void validate() const;
};

/// Flat INI with sections. Relative data paths resolve against the file's
/// directory; output_dir is taken as given. Throws ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});

/// Every resolved setting, used for the config hash.
nlohmann::json config_to_json(const PipelineConfig& cfg);
/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// argmin SMAPE, then MAE, then kModelOrder (unknown labels after, by name).
/// Throws std::invalid_argument on an empty set.
std::string select_model(std::span<const MetricReport> metrics);

/// round(sum), clamped at 0.
std::int64_t demand_from_forecast(std::span<const double> values);

/// Columns week, actual, then mstl, nbeats, nhits where present, 6 decimals.
/// Missing models are skipped and noted in `warnings`.
void emit_forecast_csv(std::ostream& out, const WeeklySeries& actual, std::span<const Forecast> forecasts,
                       std::vector<std::string>& warnings);

/// t, c, K resolved from the ILP block and EDA statistics.
shipping::ShippingInstance build_instance(const IlpBlock& block, std::span<const ingest::ModeStats> stats,
                                          std::int64_t demand, std::vector<std::string>& warnings);

struct ForecastStage {
    std::vector<Forecast> forecasts;
    std::vector<MetricReport> metrics;
    std::optional<decomp::MstlDecomposition> decomposition;
    std::vector<nn::FitResult> fits;  // same order as the neural labels in cfg.models
};

/// Trains the configured models on `train` and scores the first H weeks of
/// `test`. Neural seeds are cfg.seed + 1 (nbeats) and cfg.seed + 2 (nhits).
ForecastStage run_forecasts(const PipelineConfig& cfg, const WeeklySeries& train, const WeeklySeries& test);

struct BaselineRow {
    std::string name;
    shipping::AllocationPlan plan;
};

std::vector<BaselineRow> evaluate_baselines(const shipping::ShippingInstance& inst);
/// ILP result plus baselines, with the gap of each baseline to the optimum.
nlohmann::json compare_baselines(const shipping::ShippingInstance& inst);

struct PipelineReport {
    std::string config_hash;
    std::uint64_t seed = 0;
    nlohmann::json config;
    ingest::IngestReport ingest;
    std::size_t series_length = 0;
    std::vector<ingest::ModeStats> mode_stats;
    std::vector<MetricReport> metrics;
    std::vector<Forecast> forecasts;
    std::string selected_model;
    std::int64_t D_total = 0;
    std::int64_t forecast_demand = 0;
    shipping::ShippingInstance instance;
    shipping::AllocationResult allocation;
    std::vector<BaselineRow> baselines;
    std::vector<std::string> warnings;
    std::vector<std::string> outputs;  // file names written under output_dir
};

nlohmann::json to_json(const PipelineReport& report);

/// ingest -> eda -> split -> forecast -> select -> allocate -> baselines.
/// Writes report.json, weekly_series.csv, forecast.csv and decomposition.csv
/// into output_dir, each atomically. On failure the error names the stage and
/// files written by this run are removed.
PipelineReport run_pipeline(const PipelineConfig& cfg);

/// Writes via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace shipcast::pipeline
