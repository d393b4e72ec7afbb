#include "shipcast/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "shipcast/error.hpp"

namespace shipcast::pipeline {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kModeSections = {"first_class", "same_day", "second_class",
                                                           "standard_class"};

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

template <typename T>
T parse_value(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError(fmt::format("config: '{}' = '{}' is not a valid number", key, raw));
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& raw) {
    const auto s = lower(trim(raw));
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw ConfigError(fmt::format("config: '{}' = '{}' is not a boolean", key, raw));
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& raw) {
    std::vector<std::size_t> out;
    std::stringstream ss(raw);
    for (std::string item; std::getline(ss, item, ',');) {
        if (trim(item).empty()) continue;
        out.push_back(parse_value<std::size_t>(key, item));
    }
    return out;
}

std::vector<std::string> parse_names(const std::string& raw) {
    std::vector<std::string> out;
    std::stringstream ss(raw);
    for (std::string item; std::getline(ss, item, ',');) {
        item = lower(trim(item));
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

ParamSource parse_source(const std::string& key, const std::string& raw) {
    if (lower(trim(raw)) == "from_eda") return {};
    return ParamSource{parse_value<double>(key, raw)};
}

json source_json(const ParamSource& p) { return p.pinned ? json(*p.pinned) : json("from_eda"); }

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const DataError& e) {
        throw DataError(fmt::format("{}: {}", stage, e.what()));
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", stage, e.what()));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("{}: {}", stage, e.what()));
    } catch (const std::exception& e) {
        throw Error(fmt::format("{}: {}", stage, e.what()));
    }
}

std::size_t model_rank(const std::string& label) {
    const auto it = std::find(kModelOrder.begin(), kModelOrder.end(), label);
    return static_cast<std::size_t>(it - kModelOrder.begin());
}

json metric_json(const MetricReport& m) { return {{"model", m.model_label}, {"mae", m.mae}, {"smape", m.smape}}; }

}  // namespace

PipelineConfig PipelineConfig::defaults() {
    PipelineConfig cfg;
    const auto inst = shipping::reference_instance();
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& m = inst.modes[i];
        cfg.ilp.modes[i] = ModeParams{{m.t}, {m.c}, {double(m.K)}, m.is_fast};
    }
    cfg.ilp.budget = inst.B;
    cfg.ilp.alpha = inst.alpha;
    return cfg;
}

void PipelineConfig::validate() const {
    try {
        forecast.validate();
        model.train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (train_len == 0) throw ConfigError("config: split.train_len must be >= 1");
    if (models.empty()) throw ConfigError("config: forecast.models is empty");
    std::set<std::string> seen;
    for (const auto& m : models) {
        if (model_rank(m) == kModelOrder.size()) throw ConfigError(fmt::format("config: unknown model '{}'", m));
        if (!seen.insert(m).second) throw ConfigError(fmt::format("config: model '{}' listed twice", m));
    }
    if (model.nbeats_architecture != "generic" && model.nbeats_architecture != "interpretable") {
        throw ConfigError(fmt::format("config: nbeats.architecture '{}' is not generic or interpretable",
                                      model.nbeats_architecture));
    }
    if (!(ilp.budget >= 0.0) || !std::isfinite(ilp.budget)) throw ConfigError("config: ilp.budget must be >= 0");
    if (!(ilp.alpha >= 0.0 && ilp.alpha <= 1.0)) throw ConfigError("config: ilp.alpha must lie in [0, 1]");
    if (ilp.demand && *ilp.demand < 0) throw ConfigError("config: ilp.demand must be >= 0");
    if (!(ilp.headroom > 0.0)) throw ConfigError("config: ilp.headroom must be > 0");
    if (!(ilp.cost_fraction >= 0.0)) throw ConfigError("config: ilp.cost_fraction must be >= 0");
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& m = ilp.modes[i];
        const auto name = kModeSections[i];
        if (m.t.pinned && !(*m.t.pinned > 0.0)) throw ConfigError(fmt::format("config: {}.t must be > 0", name));
        if (m.c.pinned && !(*m.c.pinned >= 0.0)) throw ConfigError(fmt::format("config: {}.c must be >= 0", name));
        if (m.K.pinned && (!(*m.K.pinned >= 0.0) || std::floor(*m.K.pinned) != *m.K.pinned)) {
            throw ConfigError(fmt::format("config: {}.K must be a non-negative integer", name));
        }
    }
}

PipelineConfig parse_config(std::istream& in, const fs::path& base_dir) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("config: {} (line {})", e.message(), e.line()));
    }

    PipelineConfig cfg = PipelineConfig::defaults();
    auto& tc = cfg.model.train;
    std::vector<std::size_t> pools, knots, hidden;
    bool nhits_set = false;

    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError(fmt::format("config: key '{}' outside a section", section));
        }
        const auto mode_it = std::find(kModeSections.begin(), kModeSections.end(), section);
        for (const auto& [k, node] : body) {
            const std::string key = section + "." + k;
            const std::string v = node.data();
            auto unknown = [&] { throw ConfigError(fmt::format("config: unknown key '{}'", key)); };
            if (mode_it != kModeSections.end()) {
                auto& m = cfg.ilp.modes[static_cast<std::size_t>(mode_it - kModeSections.begin())];
                if (k == "t") m.t = parse_source(key, v);
                else if (k == "c") m.c = parse_source(key, v);
                else if (k == "K") m.K = parse_source(key, v);
                else if (k == "fast") m.is_fast = parse_bool(key, v);
                else unknown();
            } else if (section == "data") {
                if (k == "path") cfg.data_path = trim(v);
                else if (k == "drop_trailing_weeks") cfg.drop_trailing_weeks = parse_value<std::size_t>(key, v);
                else unknown();
            } else if (section == "schema") {
                auto& s = cfg.schema;
                if (k == "order_date") s.order_date = trim(v);
                else if (k == "quantity") s.quantity = trim(v);
                else if (k == "shipping_mode") s.shipping_mode = trim(v);
                else if (k == "delivery_days") s.delivery_days = trim(v);
                else if (k == "unit_price") s.unit_price = trim(v);
                else unknown();
            } else if (section == "split") {
                if (k == "train_len") cfg.train_len = parse_value<std::size_t>(key, v);
                else unknown();
            } else if (section == "forecast") {
                if (k == "lookback") cfg.forecast.lookback = parse_value<std::size_t>(key, v);
                else if (k == "horizon") cfg.forecast.horizon = parse_value<std::size_t>(key, v);
                else if (k == "models") cfg.models = parse_names(v);
                else unknown();
            } else if (section == "mstl") {
                auto& s = cfg.mstl.stl;
                if (k == "periods") cfg.mstl_periods = parse_list(key, v);
                else if (k == "inner_iters") s.inner_iters = parse_value<std::size_t>(key, v);
                else if (k == "outer_iters") s.outer_iters = parse_value<std::size_t>(key, v);
                else if (k == "seasonal_span") s.seasonal_span = parse_value<std::size_t>(key, v);
                else unknown();
            } else if (section == "train") {
                if (k == "learning_rate") tc.learning_rate = parse_value<double>(key, v);
                else if (k == "max_epochs") tc.max_epochs = parse_value<std::size_t>(key, v);
                else if (k == "batch_size") tc.batch_size = parse_value<std::size_t>(key, v);
                else if (k == "patience") tc.patience = parse_value<std::size_t>(key, v);
                else if (k == "warmup_epochs") tc.warmup_epochs = parse_value<std::size_t>(key, v);
                else unknown();
            } else if (section == "nbeats") {
                if (k == "architecture") cfg.model.nbeats_architecture = lower(trim(v));
                else unknown();
            } else if (section == "nhits") {
                nhits_set = true;
                if (k == "pool_kernels") pools = parse_list(key, v);
                else if (k == "forecast_knots") knots = parse_list(key, v);
                else if (k == "hidden") hidden = parse_list(key, v);
                else unknown();
            } else if (section == "run") {
                if (k == "seed") cfg.seed = parse_value<std::uint64_t>(key, v);
                else if (k == "output_dir") cfg.output_dir = trim(v);
                else unknown();
            } else if (section == "ilp") {
                if (k == "budget") cfg.ilp.budget = parse_value<double>(key, v);
                else if (k == "alpha") cfg.ilp.alpha = parse_value<double>(key, v);
                else if (k == "headroom") cfg.ilp.headroom = parse_value<double>(key, v);
                else if (k == "cost_fraction") cfg.ilp.cost_fraction = parse_value<double>(key, v);
                else if (k == "demand") {
                    if (lower(trim(v)) == "forecast") cfg.ilp.demand.reset();
                    else cfg.ilp.demand = parse_value<std::int64_t>(key, v);
                } else unknown();
            } else {
                throw ConfigError(fmt::format("config: unknown section [{}]", section));
            }
        }
    }

    if (nhits_set) {
        if (pools.empty() || pools.size() != knots.size()) {
            throw ConfigError("config: nhits.pool_kernels and nhits.forecast_knots need the same non-zero length");
        }
        for (std::size_t s = 0; s < pools.size(); ++s) {
            nn::NhitsStackConfig st;
            st.pool_kernel = pools[s];
            st.forecast_knots = knots[s];
            if (!hidden.empty()) st.hidden = hidden;
            cfg.model.nhits.stacks.push_back(st);
        }
    }
    if (!cfg.data_path.empty() && cfg.data_path.is_relative() && !base_dir.empty()) {
        cfg.data_path = base_dir / cfg.data_path;
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("config: cannot open '{}'", path.string()));
    return parse_config(in, path.parent_path());
}

json config_to_json(const PipelineConfig& cfg) {
    const auto& s = cfg.schema;
    const auto& tc = cfg.model.train;
    json modes = json::object();
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& m = cfg.ilp.modes[i];
        modes[std::string(kModeSections[i])] = {
            {"t", source_json(m.t)}, {"c", source_json(m.c)}, {"K", source_json(m.K)}, {"fast", m.is_fast}};
    }
    json nhits = json::array();
    for (const auto& st : cfg.model.nhits.stacks) {
        nhits.push_back({{"pool_kernel", st.pool_kernel}, {"forecast_knots", st.forecast_knots}, {"hidden", st.hidden}});
    }
    return json{
        {"data", {{"path", cfg.data_path.generic_string()}, {"drop_trailing_weeks", cfg.drop_trailing_weeks}}},
        {"schema",
         {{"order_date", s.order_date},
          {"quantity", s.quantity},
          {"shipping_mode", s.shipping_mode},
          {"delivery_days", s.delivery_days},
          {"unit_price", s.unit_price}}},
        {"train_len", cfg.train_len},
        {"lookback", cfg.forecast.lookback},
        {"horizon", cfg.forecast.horizon},
        {"models", cfg.models},
        {"mstl",
         {{"periods", cfg.mstl_periods},
          {"inner_iters", cfg.mstl.stl.inner_iters},
          {"outer_iters", cfg.mstl.stl.outer_iters},
          {"seasonal_span", cfg.mstl.stl.seasonal_span}}},
        {"train",
         {{"learning_rate", tc.learning_rate},
          {"max_epochs", tc.max_epochs},
          {"batch_size", tc.batch_size},
          {"patience", tc.patience},
          {"warmup_epochs", tc.warmup_epochs}}},
        {"nbeats_architecture", cfg.model.nbeats_architecture},
        {"nhits_stacks", nhits},
        {"seed", cfg.seed},
        {"ilp",
         {{"budget", cfg.ilp.budget},
          {"alpha", cfg.ilp.alpha},
          {"demand", cfg.ilp.demand ? json(*cfg.ilp.demand) : json("forecast")},
          {"headroom", cfg.ilp.headroom},
          {"cost_fraction", cfg.ilp.cost_fraction},
          {"modes", modes}}},
    };
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

std::string select_model(std::span<const MetricReport> metrics) {
    if (metrics.empty()) throw std::invalid_argument("select_model: no metrics");
    const auto best = std::min_element(metrics.begin(), metrics.end(), [](const auto& a, const auto& b) {
        if (a.smape != b.smape) return a.smape < b.smape;
        if (a.mae != b.mae) return a.mae < b.mae;
        const auto ra = model_rank(a.model_label), rb = model_rank(b.model_label);
        if (ra != rb) return ra < rb;
        return a.model_label < b.model_label;
    });
    return best->model_label;
}

std::int64_t demand_from_forecast(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    if (!std::isfinite(sum)) throw std::invalid_argument("demand_from_forecast: non-finite forecast");
    return std::max<std::int64_t>(0, std::llround(sum));
}

void emit_forecast_csv(std::ostream& out, const WeeklySeries& actual, std::span<const Forecast> forecasts,
                       std::vector<std::string>& warnings) {
    std::vector<const Forecast*> cols;
    for (auto label : kModelOrder) {
        const auto it = std::find_if(forecasts.begin(), forecasts.end(),
                                     [&](const Forecast& f) { return f.model_label == label; });
        if (it == forecasts.end()) {
            warnings.push_back(fmt::format("forecast.csv: no {} forecast, column omitted", label));
            continue;
        }
        if (it->values.size() != actual.size()) {
            throw std::invalid_argument(fmt::format("emit_forecast_csv: {} has {} values for {} weeks", label,
                                                    it->values.size(), actual.size()));
        }
        cols.push_back(&*it);
    }
    out << "week,actual";
    for (const auto* f : cols) out << ',' << f->model_label;
    out << '\n';
    for (std::size_t i = 0; i < actual.size(); ++i) {
        out << format_iso(actual.week(i)) << fmt::format(",{:.6f}", actual[i]);
        for (const auto* f : cols) out << fmt::format(",{:.6f}", f->values[i]);
        out << '\n';
    }
}

shipping::ShippingInstance build_instance(const IlpBlock& block, std::span<const ingest::ModeStats> stats,
                                          std::int64_t demand, std::vector<std::string>& warnings) {
    shipping::ShippingInstance inst;
    inst.D_total = demand;
    inst.B = block.budget;
    inst.alpha = block.alpha;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto label = ingest::kAllModes[i];
        const auto& p = block.modes[i];
        const auto st = std::find_if(stats.begin(), stats.end(), [&](const auto& s) { return s.mode == label; });
        auto eda = [&](const char* what) -> const ingest::ModeStats& {
            if (st == stats.end()) {
                throw ConfigError(fmt::format("{}.{} is from_eda but the data has no {} orders", kModeSections[i],
                                              what, ingest::to_string(label)));
            }
            return *st;
        };
        shipping::ShippingMode m;
        m.id = std::string(ingest::to_string(label));
        m.is_fast = p.is_fast;
        if (p.t.pinned) {
            m.t = *p.t.pinned;
        } else {
            m.t = eda("t").mean_delivery_days;
            if (m.t < 0.01) {
                warnings.push_back(fmt::format("{}: mean delivery {:.4f} days raised to 0.01", m.id, m.t));
                m.t = 0.01;
            }
        }
        m.c = p.c.pinned ? *p.c.pinned : eda("c").mean_unit_price * block.cost_fraction;
        m.K = p.K.pinned ? static_cast<std::int64_t>(*p.K.pinned)
                         : ingest::capacity_proxy(eda("K"), demand, block.headroom);
        inst.modes.push_back(std::move(m));
    }
    inst.validate();
    return inst;
}

ForecastStage run_forecasts(const PipelineConfig& cfg, const WeeklySeries& train, const WeeklySeries& test) {
    const std::size_t H = cfg.forecast.horizon;
    if (test.size() < H) {
        throw ConfigError(fmt::format("test segment has {} weeks, horizon needs {}", test.size(), H));
    }
    const auto actual = test.values().first(H);
    auto wants = [&](std::string_view m) { return std::find(cfg.models.begin(), cfg.models.end(), m) != cfg.models.end(); };

    std::future<nn::FitResult> nbeats, nhits;
    if (wants("nbeats")) {
        auto tc = cfg.model.train;
        tc.seed = cfg.seed + 1;
        const auto arch = cfg.model.nbeats_architecture == "interpretable"
                              ? nn::NBeatsArchitecture::interpretable_default()
                              : nn::NBeatsArchitecture::generic_default();
        nbeats = std::async(std::launch::async, [&train, fc = cfg.forecast, arch, tc] {
            return nn::nbeats_train(train.values(), fc, arch, tc);
        });
    }
    if (wants("nhits")) {
        auto tc = cfg.model.train;
        tc.seed = cfg.seed + 2;
        const auto arch = cfg.model.nhits.stacks.empty() ? nn::NhitsArchitecture::default_for(cfg.forecast)
                                                         : cfg.model.nhits;
        nhits = std::async(std::launch::async, [&train, fc = cfg.forecast, arch, tc] {
            return nn::nhits_train(train.values(), fc, arch, tc);
        });
    }

    ForecastStage out;
    if (wants("mstl")) {
        out.decomposition = decomp::mstl_decompose(train, cfg.mstl_periods, cfg.mstl);
        out.forecasts.push_back(decomp::mstl_forecast(train, cfg.mstl_periods, cfg.mstl, cfg.forecast));
    }
    for (auto* fut : {&nbeats, &nhits}) {
        if (!fut->valid()) continue;
        out.fits.push_back(fut->get());
        const std::string label = fut == &nbeats ? "nbeats" : "nhits";
        out.forecasts.push_back(nn::forecast_next(out.fits.back().model, train, label));
    }
    for (const auto& f : out.forecasts) out.metrics.push_back(evaluate_forecast(f.model_label, actual, f.values));
    return out;
}

std::vector<BaselineRow> evaluate_baselines(const shipping::ShippingInstance& inst) {
    return {{"all_standard", shipping::baseline_all_standard(inst)}, {"uniform", shipping::baseline_uniform(inst)}};
}

json compare_baselines(const shipping::ShippingInstance& inst) {
    const auto res = shipping::allocate(inst);
    json rows = json::array();
    for (const auto& b : evaluate_baselines(inst)) {
        json row = {{"name", b.name}, {"plan", shipping::to_json(b.plan)}};
        row["gap_to_ilp"] = res.feasible ? json(b.plan.objective - res.plan.objective) : json(nullptr);
        rows.push_back(std::move(row));
    }
    return {{"ilp", shipping::to_json(res)}, {"baselines", rows}};
}

json to_json(const PipelineReport& r) {
    json metrics = json::array();
    for (const auto& m : r.metrics) metrics.push_back(metric_json(m));
    json forecasts = json::array();
    for (const auto& f : r.forecasts) {
        forecasts.push_back({{"model", f.model_label}, {"horizon_start_week", format_iso(f.horizon_start_week)},
                             {"values", f.values}});
    }
    json stats = json::array();
    for (const auto& s : r.mode_stats) stats.push_back(s);
    json baselines = json::array();
    for (const auto& b : r.baselines) {
        json row = {{"name", b.name}, {"plan", shipping::to_json(b.plan)}};
        row["gap_to_ilp"] = r.allocation.feasible ? json(b.plan.objective - r.allocation.plan.objective) : json(nullptr);
        baselines.push_back(std::move(row));
    }
    return json{
        {"schema_version", kReportSchemaVersion},
        {"config_hash", r.config_hash},
        {"seed", r.seed},
        {"config", r.config},
        {"ingest", r.ingest},
        {"series_length", r.series_length},
        {"mode_stats", stats},
        {"metrics", metrics},
        {"forecasts", forecasts},
        {"selected_model", r.selected_model},
        {"forecast_demand", r.forecast_demand},
        {"D_total", r.D_total},
        {"instance", shipping::to_json(r.instance)},
        {"allocation", shipping::to_json(r.allocation)},
        {"baselines", baselines},
        {"warnings", r.warnings},
        {"outputs", r.outputs},
    };
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot write '{}'", tmp.string()));
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error(fmt::format("short write to '{}'", tmp.string()));
        }
    }
    fs::rename(tmp, path);
}

PipelineReport run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    PipelineReport rep;
    rep.seed = cfg.seed;
    rep.config = config_to_json(cfg);
    rep.config_hash = fnv1a_hex(rep.config.dump());

    std::vector<fs::path> written;
    auto emit = [&](const std::string& name, const std::string& contents) {
        const auto path = cfg.output_dir / name;
        write_file_atomic(path, contents);
        written.push_back(path);
        rep.outputs.push_back(name);
    };

    try {
        const auto parsed = run_stage("ingest", [&] {
            std::ifstream in(cfg.data_path, std::ios::binary);
            if (!in) throw DataError(fmt::format("cannot open '{}'", cfg.data_path.string()));
            return ingest::parse_transactions(in, cfg.schema);
        });
        rep.ingest = parsed.report;
        if (parsed.report.rows_skipped > 0) {
            rep.warnings.push_back(fmt::format("ingest: skipped {} of {} rows", parsed.report.rows_skipped,
                                               parsed.report.rows_read));
        }
        const auto series = run_stage("ingest", [&] {
            if (parsed.records.empty()) throw DataError("no valid transactions");
            return ingest::aggregate_weekly(parsed.records, {std::chrono::Monday, cfg.drop_trailing_weeks});
        });
        rep.series_length = series.size();
        rep.mode_stats = run_stage("eda", [&] { return ingest::extract_mode_stats(parsed.records); });

        const auto [train, test] = run_stage("split", [&] { return ingest::temporal_split(series, cfg.train_len); });
        const std::size_t H = cfg.forecast.horizon;
        if (test.size() > H) {
            rep.warnings.push_back(fmt::format("split: test has {} weeks; scoring the first {}", test.size(), H));
        }

        auto stage = run_stage("forecast", [&] { return run_forecasts(cfg, train, test); });
        rep.metrics = stage.metrics;
        rep.forecasts = stage.forecasts;
        rep.selected_model = run_stage("select", [&] { return select_model(rep.metrics); });
        const auto& chosen = *std::find_if(rep.forecasts.begin(), rep.forecasts.end(),
                                           [&](const Forecast& f) { return f.model_label == rep.selected_model; });
        rep.forecast_demand = demand_from_forecast(chosen.values);
        rep.D_total = cfg.ilp.demand.value_or(rep.forecast_demand);
        if (cfg.ilp.demand) {
            rep.warnings.push_back(fmt::format("ilp: demand pinned to {} (forecast sum {})", rep.D_total,
                                               rep.forecast_demand));
        }

        rep.instance = run_stage("allocate", [&] {
            return build_instance(cfg.ilp, rep.mode_stats, rep.D_total, rep.warnings);
        });
        rep.allocation = run_stage("allocate", [&] { return shipping::allocate(rep.instance); });
        if (!rep.allocation.feasible) {
            rep.warnings.push_back(fmt::format("allocate: {}",
                                               shipping::to_json(rep.allocation).dump()));
        }
        rep.baselines = run_stage("baselines", [&] { return evaluate_baselines(rep.instance); });

        run_stage("write", [&] {
            fs::create_directories(cfg.output_dir);
            std::ostringstream ws;
            write_series_csv(ws, series);
            emit("weekly_series.csv", ws.str());
            const WeeklySeries actual(test.start_week(), {test.values().begin(), test.values().begin() + long(H)});
            std::ostringstream fc;
            emit_forecast_csv(fc, actual, rep.forecasts, rep.warnings);
            emit("forecast.csv", fc.str());
            if (stage.decomposition) {
                std::ostringstream dc;
                decomp::write_decomposition_csv(dc, train.values(), *stage.decomposition);
                emit("decomposition.csv", dc.str());
            }
            rep.outputs.push_back("report.json");
            const auto body = to_json(rep).dump(2) + "\n";
            rep.outputs.pop_back();
            emit("report.json", body);
            return 0;
        });
    } catch (...) {
        for (const auto& p : written) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        throw;
    }
    return rep;
}

}  // namespace shipcast::pipeline
