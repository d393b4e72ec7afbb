#include <fstream>
#include <optional>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "shipcast/error.hpp"
#include "shipcast/pipeline.hpp"

namespace py = pybind11;
using namespace shipcast;
using nlohmann::json;

namespace {

// Documents cross the boundary as JSON text through Python's json module.
py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& obj) {
    const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
    return json::parse(text);
}

shipping::ShippingInstance instance_arg(const py::handle& obj) {
    if (obj.is_none()) return shipping::reference_instance();
    return shipping::instance_from_json(from_py(obj));
}

WeeklySeries series_arg(const std::vector<double>& values) {
    return WeeklySeries(Date{std::chrono::year{2015} / std::chrono::January / 5}, values);
}

}  // namespace

PYBIND11_MODULE(_shipcast, m) {
    m.doc() = "Weekly demand forecasting and shipping-mode allocation";

    static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
    static py::exception<DataError> data_error(m, "DataError", base.ptr());
    static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const DataError& e) {
            py::set_error(data_error, e.what());
        } catch (const ConfigError& e) {
            py::set_error(config_error, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    m.def("reference_instance", [] { return to_py(shipping::to_json(shipping::reference_instance())); },
          "The reference four-mode instance as a dict.");
    m.def(
        "allocate", [](const py::object& inst) { return to_py(shipping::to_json(shipping::allocate(instance_arg(inst)))); },
        py::arg("instance") = py::none(), "Optimal integer allocation (dict with status, plan or binding groups).");
    m.def(
        "evaluate_plan",
        [](const std::vector<std::int64_t>& x, const py::object& inst) {
            return to_py(shipping::to_json(shipping::evaluate_plan(std::span<const std::int64_t>(x), instance_arg(inst))));
        },
        py::arg("x"), py::arg("instance") = py::none(), "Audit an allocation given in mode order.");
    m.def(
        "oracle_enumerate",
        [](const py::object& inst) {
            const auto o = shipping::oracle_enumerate(instance_arg(inst));
            json j{{"feasible", o.feasible}, {"evaluated", o.evaluated}};
            if (o.feasible) j["plan"] = shipping::to_json(o.plan);
            return to_py(j);
        },
        py::arg("instance") = py::none(), "Exhaustive reference solver for small instances.");
    m.def(
        "compare_baselines", [](const py::object& inst) { return to_py(pipeline::compare_baselines(instance_arg(inst))); },
        py::arg("instance") = py::none());

    m.def("smape", [](const std::vector<double>& a, const std::vector<double>& f) { return smape(a, f); });
    m.def("mae", [](const std::vector<double>& a, const std::vector<double>& f) { return mae(a, f); });

    m.def(
        "mstl_decompose",
        [](const std::vector<double>& values, const std::vector<std::size_t>& periods, std::size_t inner_iters,
           std::size_t outer_iters) {
            decomp::MstlParams p;
            p.stl.inner_iters = inner_iters;
            p.stl.outer_iters = outer_iters;
            const auto d = decomp::mstl_decompose(values, periods, p);
            py::dict seasonal;
            for (const auto& [period, s] : d.seasonal) seasonal[py::int_(period)] = s;
            py::dict out;
            out["trend"] = d.trend;
            out["seasonal"] = seasonal;
            out["remainder"] = d.remainder;
            return out;
        },
        py::arg("values"), py::arg("periods"), py::arg("inner_iters") = 2, py::arg("outer_iters") = 1);
    m.def(
        "mstl_forecast",
        [](const std::vector<double>& values, const std::vector<std::size_t>& periods, std::size_t lookback,
           std::size_t horizon) {
            return decomp::mstl_forecast(series_arg(values), periods, {}, {lookback, horizon}).values;
        },
        py::arg("values"), py::arg("periods"), py::arg("lookback") = 8, py::arg("horizon") = 4);
    m.def(
        "train_forecast",
        [](const std::string& model, const std::vector<double>& values, std::size_t lookback, std::size_t horizon,
           std::uint64_t seed, std::size_t max_epochs) {
            const ForecastConfig fc{lookback, horizon};
            nn::TrainConfig tc;
            tc.seed = seed;
            tc.max_epochs = max_epochs;
            nn::FitResult fit;
            {
                py::gil_scoped_release release;
                if (model == "nbeats") {
                    fit = nn::nbeats_train(values, fc, nn::NBeatsArchitecture::generic_default(), tc);
                } else if (model == "nbeats_interpretable") {
                    fit = nn::nbeats_train(values, fc, nn::NBeatsArchitecture::interpretable_default(), tc);
                } else if (model == "nhits") {
                    fit = nn::nhits_train(values, fc, nn::NhitsArchitecture::default_for(fc), tc);
                } else {
                    throw ConfigError("model must be nbeats, nbeats_interpretable or nhits");
                }
            }
            py::dict out;
            out["forecast"] = nn::forecast_next(fit.model, series_arg(values), model).values;
            out["train_loss"] = fit.history.train_loss;
            out["val_loss"] = fit.history.val_loss;
            out["best_epoch"] = fit.history.best_epoch;
            out["parameters"] = fit.model.parameter_count();
            return out;
        },
        py::arg("model"), py::arg("values"), py::arg("lookback") = 8, py::arg("horizon") = 4, py::arg("seed") = 0,
        py::arg("max_epochs") = 500, "Fit N-BEATS or N-HiTS on `values` and forecast the next `horizon` weeks.");

    m.def(
        "ingest",
        [](const std::filesystem::path& path, std::size_t drop_trailing_weeks) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw DataError("cannot open '" + path.string() + "'");
            const auto parsed = ingest::parse_transactions(in);
            json j{{"report", parsed.report}};
            if (!parsed.records.empty()) {
                const auto s = ingest::aggregate_weekly(parsed.records, {std::chrono::Monday, drop_trailing_weeks});
                j["start_week"] = format_iso(s.start_week());
                j["weekly"] = std::vector<double>(s.values().begin(), s.values().end());
                json stats = json::array();
                for (const auto& st : ingest::extract_mode_stats(parsed.records)) stats.push_back(st);
                j["mode_stats"] = stats;
            }
            return to_py(j);
        },
        py::arg("path"), py::arg("drop_trailing_weeks") = 0,
        "Parse a transactions CSV; returns the ingest report, weekly totals and mode statistics.");
    m.def(
        "write_synthetic_transactions",
        [](const std::filesystem::path& path, std::uint64_t seed, std::size_t weeks) {
            auto spec = ingest::default_synthetic_transactions(seed);
            spec.weekly.length = weeks;
            const auto records = ingest::synthesize_transactions(spec);
            std::ostringstream os;
            ingest::write_transactions_csv(os, records);
            pipeline::write_file_atomic(path, os.str());
            return records.size();
        },
        py::arg("path"), py::arg("seed") = 42, py::arg("weeks") = 162);

    m.def(
        "select_model",
        [](const py::list& metrics) {
            std::vector<MetricReport> ms;
            for (const auto& item : metrics) {
                const auto d = item.cast<py::dict>();
                ms.push_back({d["model"].cast<std::string>(), d["mae"].cast<double>(), d["smape"].cast<double>()});
            }
            return pipeline::select_model(ms);
        },
        py::arg("metrics"), "argmin SMAPE, then MAE, then the fixed label order.");
    m.def(
        "run_pipeline",
        [](const std::filesystem::path& config, std::optional<std::uint64_t> seed,
           std::optional<std::filesystem::path> out) {
            auto cfg = pipeline::load_config(config);
            if (seed) cfg.seed = *seed;
            if (out) cfg.output_dir = *out;
            pipeline::PipelineReport rep;
            {
                py::gil_scoped_release release;
                rep = pipeline::run_pipeline(cfg);
            }
            return to_py(pipeline::to_json(rep));
        },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none(),
        "End-to-end run; writes the report and CSVs into the output directory and returns the report.");
}
