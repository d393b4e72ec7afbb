// shipcast command line: ingest, eda, forecast, optimize, pipeline, compare-baselines, synth.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 infeasible
// optimization, 3 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "shipcast/error.hpp"
#include "shipcast/pipeline.hpp"

namespace fs = std::filesystem;
using namespace shipcast;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitData = 3;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

pipeline::PipelineConfig resolve_config(const Globals& g, const std::string& data_override) {
    auto cfg = g.config.empty() ? pipeline::PipelineConfig::defaults() : pipeline::load_config(g.config);
    if (!data_override.empty()) cfg.data_path = data_override;
    if (g.seed) cfg.seed = *g.seed;
    if (!g.out.empty()) cfg.output_dir = g.out;
    if (cfg.data_path.empty()) throw ConfigError("no data file: pass --data or set [data] path in the config");
    return cfg;
}

ingest::ParseResult read_transactions(const pipeline::PipelineConfig& cfg) {
    std::ifstream in(cfg.data_path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open '{}'", cfg.data_path.string()));
    return ingest::parse_transactions(in, cfg.schema);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open '{}'", path));
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(fmt::format("{}: {}", path, e.what()));
    }
}

// Prints to stdout and, when an output directory is set, writes `name` there.
void publish(const Globals& g, const std::string& name, const std::string& body) {
    std::cout << body;
    if (g.out.empty()) return;
    fs::create_directories(g.out);
    pipeline::write_file_atomic(fs::path(g.out) / name, body);
}

int cmd_ingest(const Globals& g, const std::string& data, std::size_t drop) {
    auto cfg = resolve_config(g, data);
    if (drop > 0) cfg.drop_trailing_weeks = drop;
    const auto parsed = read_transactions(cfg);
    if (parsed.records.empty()) throw DataError("no valid transactions");
    const auto series = ingest::aggregate_weekly(parsed.records, {std::chrono::Monday, cfg.drop_trailing_weeks});
    json report = parsed.report;
    report["weeks"] = series.size();
    report["first_week"] = format_iso(series.start_week());
    report["total_quantity"] = series.sum();
    publish(g, "ingest_report.json", report.dump(2) + "\n");
    if (!g.out.empty()) {
        std::ostringstream os;
        write_series_csv(os, series);
        pipeline::write_file_atomic(fs::path(g.out) / "weekly_series.csv", os.str());
    }
    return kExitOk;
}

int cmd_eda(const Globals& g, const std::string& data) {
    const auto cfg = resolve_config(g, data);
    const auto parsed = read_transactions(cfg);
    if (parsed.records.empty()) throw DataError("no valid transactions");
    json stats = json::array();
    for (const auto& s : ingest::extract_mode_stats(parsed.records)) stats.push_back(s);
    publish(g, "mode_stats.json", json{{"mode_stats", stats}, {"ingest", parsed.report}}.dump(2) + "\n");
    return kExitOk;
}

int cmd_forecast(const Globals& g, const std::string& data, const std::string& model) {
    auto cfg = resolve_config(g, data);
    if (model != "all") cfg.models = {model};
    cfg.validate();
    const auto parsed = read_transactions(cfg);
    if (parsed.records.empty()) throw DataError("no valid transactions");
    const auto series = ingest::aggregate_weekly(parsed.records, {std::chrono::Monday, cfg.drop_trailing_weeks});
    const auto [train, test] = ingest::temporal_split(series, cfg.train_len);
    const auto stage = pipeline::run_forecasts(cfg, train, test);
    json metrics = json::array();
    for (const auto& m : stage.metrics) metrics.push_back({{"model", m.model_label}, {"mae", m.mae}, {"smape", m.smape}});
    json forecasts = json::array();
    for (const auto& f : stage.forecasts) forecasts.push_back({{"model", f.model_label}, {"values", f.values}});
    publish(g, "metrics.json",
            json{{"metrics", metrics}, {"forecasts", forecasts}, {"selected_model", pipeline::select_model(stage.metrics)}}
                    .dump(2) +
                "\n");
    if (!g.out.empty()) {
        std::vector<std::string> warnings;
        const auto H = cfg.forecast.horizon;
        const WeeklySeries actual(test.start_week(), {test.values().begin(), test.values().begin() + long(H)});
        std::ostringstream os;
        pipeline::emit_forecast_csv(os, actual, stage.forecasts, warnings);
        pipeline::write_file_atomic(fs::path(g.out) / "forecast.csv", os.str());
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    }
    return kExitOk;
}

int cmd_optimize(const Globals& g, const std::string& instance_path) {
    const auto inst = shipping::instance_from_json(read_json_file(instance_path));
    const auto res = shipping::allocate(inst);
    publish(g, "plan.json", shipping::to_json(res).dump(2) + "\n");
    if (!res.feasible) {
        std::cerr << "infeasible: binding constraint groups:";
        for (const auto& b : res.binding) std::cerr << ' ' << b;
        std::cerr << '\n';
        return kExitInfeasible;
    }
    return kExitOk;
}

int cmd_compare(const Globals& g, const std::string& instance_path) {
    const auto inst = instance_path.empty() ? shipping::reference_instance()
                                            : shipping::instance_from_json(read_json_file(instance_path));
    const auto j = pipeline::compare_baselines(inst);
    publish(g, "baselines.json", j.dump(2) + "\n");
    return j.at("ilp").at("feasible").get<bool>() ? kExitOk : kExitInfeasible;
}

int cmd_pipeline(const Globals& g) {
    const auto cfg = resolve_config(g, "");
    const auto rep = pipeline::run_pipeline(cfg);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << fmt::format("selected {} ; D_total {} ; status {} ; report {}\n", rep.selected_model, rep.D_total,
                             lp::to_string(rep.allocation.status), (cfg.output_dir / "report.json").string());
    return rep.allocation.feasible ? kExitOk : kExitInfeasible;
}

int cmd_synth(const Globals& g, const std::string& output, std::size_t weeks) {
    auto spec = ingest::default_synthetic_transactions(g.seed.value_or(42));
    spec.weekly.length = weeks;
    const auto records = ingest::synthesize_transactions(spec);
    std::ostringstream os;
    ingest::write_transactions_csv(os, records);
    fs::path path = output;
    if (path.empty()) path = fs::path(g.out.empty() ? "." : g.out) / "synthetic_transactions.csv";
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    pipeline::write_file_atomic(path, os.str());
    std::cout << fmt::format("wrote {} transactions over {} weeks to {}\n", records.size(), weeks, path.string());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shipcast: weekly demand forecasting and shipping-mode allocation"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Master seed (overrides [run] seed)");
    app.add_option("--out", g.out, "Output directory (overrides [run] output_dir)");

    std::string data, instance, model = "all", output;
    std::size_t drop = 0, weeks = 162;

    auto* ingest_cmd = app.add_subcommand("ingest", "Transactions CSV -> weekly series CSV and ingest report");
    ingest_cmd->add_option("--data", data, "Transactions CSV");
    ingest_cmd->add_option("--drop-trailing-weeks", drop, "Weeks removed from the end");

    auto* eda_cmd = app.add_subcommand("eda", "Per-mode delivery statistics");
    eda_cmd->add_option("--data", data, "Transactions CSV");

    auto* fc_cmd = app.add_subcommand("forecast", "Train and score forecasters on the configured split");
    fc_cmd->add_option("--data", data, "Transactions CSV");
    fc_cmd->add_option("--model", model, "mstl, nbeats, nhits or all")
        ->check(CLI::IsMember({"all", "mstl", "nbeats", "nhits"}));

    auto* opt_cmd = app.add_subcommand("optimize", "Instance JSON -> allocation plan JSON");
    opt_cmd->add_option("instance", instance, "Instance JSON")->required();

    auto* pipe_cmd = app.add_subcommand("pipeline", "End-to-end run driven by --config");

    auto* cmp_cmd = app.add_subcommand("compare-baselines", "ILP against the all-standard and uniform baselines");
    cmp_cmd->add_option("instance", instance, "Instance JSON (default: built-in reference instance)");

    auto* synth_cmd = app.add_subcommand("synth", "Write the seeded synthetic transactions CSV");
    synth_cmd->add_option("--output", output, "Destination file");
    synth_cmd->add_option("--weeks", weeks, "Number of weeks")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ingest_cmd) return cmd_ingest(g, data, drop);
        if (*eda_cmd) return cmd_eda(g, data);
        if (*fc_cmd) return cmd_forecast(g, data, model);
        if (*opt_cmd) return cmd_optimize(g, instance);
        if (*pipe_cmd) return cmd_pipeline(g);
        if (*cmp_cmd) return cmd_compare(g, instance);
        if (*synth_cmd) return cmd_synth(g, output, weeks);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
