#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "shipcast/csv.hpp"
#include "shipcast/error.hpp"
#include "shipcast/pipeline.hpp"

using namespace shipcast;
using namespace shipcast::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("shipcast_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Small synthetic dataset and a fast training configuration.
PipelineConfig small_config(const fs::path& dir) {
    auto spec = ingest::default_synthetic_transactions(11);
    spec.weekly.length = 120;
    const auto records = ingest::synthesize_transactions(spec);
    std::ofstream out(dir / "tx.csv");
    ingest::write_transactions_csv(out, records);
    out.close();
    auto cfg = PipelineConfig::defaults();
    cfg.data_path = dir / "tx.csv";
    cfg.train_len = 116;
    cfg.model.train.max_epochs = 60;
    cfg.model.train.warmup_epochs = 10;
    cfg.output_dir = dir / "out";
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("select_model: smape, then mae, then label order") {
    std::vector<MetricReport> m{{"nhits", 3.0, 10.0}, {"nbeats", 4.0, 11.0}, {"mstl", 1.0, 12.0}};
    CHECK(select_model(m) == "nhits");
    m = {{"nhits", 3.0, 10.0}, {"nbeats", 2.0, 10.0}, {"mstl", 5.0, 10.0}};
    CHECK(select_model(m) == "nbeats");
    m = {{"nhits", 3.0, 10.0}, {"nbeats", 3.0, 10.0}, {"mstl", 3.0, 10.0}};
    CHECK(select_model(m) == "mstl");
    m = {{"nhits", 3.0, 10.0}, {"nbeats", 3.0, 10.0}};
    CHECK(select_model(m) == "nbeats");
    CHECK_THROWS_AS(select_model(std::vector<MetricReport>{}), std::invalid_argument);
}

TEST_CASE("demand handoff rounds the forecast sum") {
    CHECK(demand_from_forecast(std::vector<double>{479.4, 480.2, 479.1, 479.6}) == 1918);
    CHECK(demand_from_forecast(std::vector<double>{0.25, 0.25}) == 1);
    CHECK(demand_from_forecast(std::vector<double>{0.2, 0.2}) == 0);
    CHECK(demand_from_forecast(std::vector<double>{-5.0, 1.0}) == 0);
}

TEST_CASE("emit_forecast_csv layout, omissions and precision") {
    const WeeklySeries actual(Date{std::chrono::year{2018} / 1 / 1}, {10, 11, 12, 13});
    std::vector<Forecast> f{{"nhits", {1.1234567, 2, 3, 4}, {}}, {"mstl", {5, 6, 7, 8.0000004}, {}}};
    std::vector<std::string> warnings;
    std::ostringstream os;
    emit_forecast_csv(os, actual, f, warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("nbeats") != std::string::npos);
    std::istringstream in(os.str());
    CsvReader r(in);
    std::vector<std::string> row;
    REQUIRE(r.next(row));
    CHECK(row == std::vector<std::string>{"week", "actual", "mstl", "nhits"});
    std::size_t rows = 0;
    while (r.next(row)) {
        if (rows == 0) {
            CHECK(row[0] == "2018-01-01");
            CHECK(std::stod(row[3]) == doctest::Approx(1.123457).epsilon(1e-12));
        }
        ++rows;
    }
    CHECK(rows == 4);
    CHECK(os.str().find("8.000000") != std::string::npos);
}

TEST_CASE("config parsing") {
    std::istringstream ok(R"(
[data]
path = tx.csv
[forecast]
models = nhits, MSTL
[ilp]
demand = 1918
[first_class]
K = from_eda
[mstl]
periods = 4
[nhits]
pool_kernels = 2, 1
forecast_knots = 1, 4
)");
    const auto cfg = parse_config(ok, "/base");
    CHECK(cfg.data_path == fs::path("/base/tx.csv"));
    CHECK(cfg.models == std::vector<std::string>{"nhits", "mstl"});
    CHECK(cfg.ilp.demand == 1918);
    CHECK(cfg.ilp.modes[0].K.from_eda());
    CHECK(cfg.ilp.modes[0].t.pinned == 2.0);
    CHECK(cfg.mstl_periods == std::vector<std::size_t>{4});
    REQUIRE(cfg.model.nhits.stacks.size() == 2);
    CHECK(cfg.model.nhits.stacks[1].forecast_knots == 4);

    for (const char* bad : {"[data]\nwhat = 1\n", "[nowhere]\nx = 1\n", "[ilp]\nalpha = 2\n", "[split]\ntrain_len = x\n",
                            "[forecast]\nmodels = prophet\n", "[same_day]\nt = 0\n", "[standard_class]\nK = 1.5\n",
                            "[forecast]\nlookback = 2\nhorizon = 4\n"}) {
        std::istringstream in(bad);
        CHECK_THROWS_AS(parse_config(in), ConfigError);
    }
}

TEST_CASE("config hash is stable and sensitive") {
    const auto a = PipelineConfig::defaults();
    auto b = a;
    CHECK(fnv1a_hex(config_to_json(a).dump()) == fnv1a_hex(config_to_json(b).dump()));
    b.seed += 1;
    CHECK(fnv1a_hex(config_to_json(a).dump()) != fnv1a_hex(config_to_json(b).dump()));
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("build_instance resolves from_eda values") {
    std::vector<ingest::ModeStats> stats{
        {ingest::ShippingModeLabel::FirstClass, 2.2, 10, 0.25, 40.0},
        {ingest::ShippingModeLabel::SameDay, 0.0, 10, 0.25, 30.0},
        {ingest::ShippingModeLabel::SecondClass, 3.1, 10, 0.25, 20.0},
        {ingest::ShippingModeLabel::StandardClass, 3.9, 10, 0.25, 10.0},
    };
    IlpBlock block = PipelineConfig::defaults().ilp;
    for (auto& m : block.modes) m = ModeParams{{}, {}, {}, m.is_fast};
    std::vector<std::string> warnings;
    const auto inst = build_instance(block, stats, 1000, warnings);
    CHECK(inst.modes[0].t == 2.2);
    CHECK(inst.modes[1].t == 0.01);
    CHECK(warnings.size() == 1);
    CHECK(inst.modes[0].c == doctest::Approx(0.4));
    CHECK(inst.modes[3].K == 300);
    CHECK(inst.modes[0].is_fast);
    stats.pop_back();
    CHECK_THROWS_AS(build_instance(block, stats, 1000, warnings), ConfigError);
}

TEST_CASE("run_pipeline: outputs, handoff, determinism") {
    const auto dir = scratch("pipeline");
    auto cfg = small_config(dir);
    const auto rep = run_pipeline(cfg);
    CHECK(rep.series_length == 120);
    CHECK(rep.metrics.size() == 3);
    const auto& chosen = *std::find_if(rep.forecasts.begin(), rep.forecasts.end(),
                                       [&](const Forecast& f) { return f.model_label == rep.selected_model; });
    CHECK(rep.D_total == demand_from_forecast(chosen.values));
    CHECK(rep.instance.D_total == rep.D_total);
    for (const char* f : {"report.json", "forecast.csv", "weekly_series.csv", "decomposition.csv"}) {
        CHECK(fs::exists(cfg.output_dir / f));
    }
    const auto j = nlohmann::json::parse(slurp(cfg.output_dir / "report.json"));
    CHECK(j.at("schema_version") == kReportSchemaVersion);
    CHECK(j.at("config_hash") == rep.config_hash);
    CHECK(j.at("seed") == 42);

    const auto first = slurp(cfg.output_dir / "report.json");
    cfg.output_dir = dir / "again";
    run_pipeline(cfg);
    CHECK(slurp(cfg.output_dir / "report.json") == first);
}

TEST_CASE("run_pipeline: pinned demand reproduces the reference allocation") {
    const auto dir = scratch("pinned");
    auto cfg = small_config(dir);
    cfg.models = {"mstl"};
    cfg.ilp.demand = 1918;
    const auto rep = run_pipeline(cfg);
    REQUIRE(rep.allocation.feasible);
    CHECK(rep.allocation.plan.objective == 5032.0);
    CHECK(rep.allocation.plan.x == std::vector<std::int64_t>{560, 240, 800, 318});
    CHECK_FALSE(rep.baselines[0].plan.report.overall_feasible);
}

TEST_CASE("run_pipeline: failures name the stage and leave no outputs") {
    const auto dir = scratch("fail");
    auto cfg = small_config(dir);
    SUBCASE("missing data") {
        cfg.data_path = dir / "missing.csv";
        try {
            run_pipeline(cfg);
            FAIL("expected an error");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).rfind("ingest:", 0) == 0);
        }
    }
    SUBCASE("split too long") {
        cfg.train_len = 500;
        CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
    }
    SUBCASE("failure while writing removes earlier files") {
        fs::create_directories(cfg.output_dir / "report.json");  // a directory blocks the final rename
        CHECK_THROWS(run_pipeline(cfg));
        CHECK_FALSE(fs::exists(cfg.output_dir / "forecast.csv"));
        CHECK_FALSE(fs::exists(cfg.output_dir / "weekly_series.csv"));
    }
    CHECK_FALSE(fs::exists(cfg.output_dir / "forecast.csv"));
}
