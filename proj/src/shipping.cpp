#include "shipcast/shipping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "shipcast/error.hpp"

namespace shipcast::shipping {

using nlohmann::json;

void ShippingInstance::validate() const {
    if (modes.empty()) throw ConfigError("shipping instance: at least one mode is required");
    std::set<std::string> seen;
    for (const auto& m : modes) {
        if (m.id.empty()) throw ConfigError("shipping instance: mode id must be non-empty");
        if (!seen.insert(m.id).second) throw ConfigError(fmt::format("shipping instance: duplicate mode id '{}'", m.id));
        if (!(m.t > 0.0) || !std::isfinite(m.t)) throw ConfigError(fmt::format("shipping instance: t for '{}' must be > 0", m.id));
        if (!(m.c >= 0.0) || !std::isfinite(m.c)) throw ConfigError(fmt::format("shipping instance: c for '{}' must be >= 0", m.id));
        if (m.K < 0) throw ConfigError(fmt::format("shipping instance: K for '{}' must be >= 0", m.id));
    }
    if (D_total < 0) throw ConfigError("shipping instance: D_total must be >= 0");
    if (!std::isfinite(B)) throw ConfigError("shipping instance: B must be finite");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("shipping instance: alpha must lie in [0, 1]");
}

std::int64_t ShippingInstance::service_floor() const {
    const double raw = alpha * static_cast<double>(D_total);
    return static_cast<std::int64_t>(std::ceil(raw - 1e-9));
}

ShippingInstance reference_instance() {
    ShippingInstance inst;
    inst.modes = {
        {"First Class", 2.0, 1.5, 560, true},
        {"Same Day", 1.0, 2.5, 240, true},
        {"Second Class", 3.0, 1.0, 800, false},
        {"Standard Class", 4.0, 0.8, 1200, false},
    };
    inst.D_total = 1918;
    inst.B = 5500.0;
    inst.alpha = 0.10;
    return inst;
}

const ConstraintCheck* ConstraintReport::find(const std::string& name) const {
    for (const auto& r : rows) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

std::int64_t AllocationPlan::units(const std::string& mode) const {
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (modes[i] == mode) return x[i];
    }
    throw std::out_of_range(fmt::format("allocation plan has no mode '{}'", mode));
}

namespace {

bool within_budget(double cost, double B) { return cost <= B + 1e-9 * std::max(1.0, std::abs(B)); }

// Mode indices in ascending id order.
std::vector<std::size_t> id_order(const ShippingInstance& inst) {
    std::vector<std::size_t> order(inst.modes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return inst.modes[a].id < inst.modes[b].id; });
    return order;
}

bool lex_less(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b, const std::vector<std::size_t>& order) {
    for (auto i : order) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

}  // namespace

AllocationPlan evaluate_plan(std::span<const std::int64_t> x, const ShippingInstance& inst) {
    if (x.size() != inst.modes.size()) {
        throw std::invalid_argument(fmt::format("evaluate_plan: {} values for {} modes", x.size(), inst.modes.size()));
    }
    AllocationPlan plan;
    std::int64_t total = 0;
    std::int64_t fast = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0) throw std::invalid_argument(fmt::format("evaluate_plan: negative allocation for '{}'", inst.modes[i].id));
        const auto& m = inst.modes[i];
        plan.modes.push_back(m.id);
        plan.x.push_back(x[i]);
        plan.objective += m.t * static_cast<double>(x[i]);
        plan.total_cost += m.c * static_cast<double>(x[i]);
        total += x[i];
        if (m.is_fast) fast += x[i];
    }
    plan.fast_share = inst.D_total > 0 ? static_cast<double>(fast) / static_cast<double>(inst.D_total) : 0.0;

    auto& rows = plan.report.rows;
    rows.push_back({"demand", total == inst.D_total, 0.0 - static_cast<double>(std::llabs(total - inst.D_total))});
    rows.push_back({"budget", within_budget(plan.total_cost, inst.B), inst.B - plan.total_cost});
    if (inst.alpha > 0.0) {
        const auto floor = inst.service_floor();
        rows.push_back({"fast_service", fast >= floor, static_cast<double>(fast - floor)});
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& m = inst.modes[i];
        rows.push_back({"capacity_" + m.id, x[i] <= m.K, static_cast<double>(m.K - x[i])});
    }
    plan.report.overall_feasible = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.satisfied; });
    return plan;
}

AllocationPlan evaluate_plan(std::span<const double> x, const ShippingInstance& inst) {
    std::vector<std::int64_t> units;
    units.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        if (!std::isfinite(v) || v < 0.0 || v != std::floor(v)) {
            throw std::invalid_argument(fmt::format("evaluate_plan: allocation {} at position {} is not a nonnegative integer", v, i));
        }
        units.push_back(static_cast<std::int64_t>(v));
    }
    return evaluate_plan(std::span<const std::int64_t>(units), inst);
}

lp::LpProblem build_shipping_lp(const ShippingInstance& inst) {
    inst.validate();
    const std::size_t n = inst.modes.size();
    auto p = lp::LpProblem::with_vars(n);
    std::vector<double> ones(n, 1.0), costs(n), fast(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = inst.modes[i];
        p.objective[i] = m.t;
        p.upper[i] = static_cast<double>(m.K);
        p.integer[i] = true;
        costs[i] = m.c;
        if (m.is_fast) fast[i] = 1.0;
    }
    p.add_row(ones, lp::Sense::Equal, static_cast<double>(inst.D_total), "demand");
    p.add_row(costs, lp::Sense::LessEqual, inst.B, "budget");
    if (inst.alpha > 0.0) {
        p.add_row(fast, lp::Sense::GreaterEqual, static_cast<double>(inst.service_floor()), "fast_service");
    }
    return p;
}

namespace {

std::vector<std::int64_t> rounded(const std::vector<double>& x) {
    std::vector<std::int64_t> out;
    for (double v : x) out.push_back(std::llround(v));
    return out;
}

// Among plans with objective <= z, minimize modes one at a time in id order.
std::vector<std::int64_t> lex_refine(const ShippingInstance& inst, lp::LpProblem p, double z, std::vector<std::int64_t> x,
                                     const lp::IlpOptions& opts) {
    p.add_row(p.objective, lp::Sense::LessEqual, z + 1e-9 * (1.0 + std::abs(z)), "objective");
    for (auto k : id_order(inst)) {
        std::fill(p.objective.begin(), p.objective.end(), 0.0);
        p.objective[k] = 1.0;
        const auto sol = lp::ilp_solve(p, opts);
        if (sol.status != lp::LpStatus::Optimal) return x;
        const double v = std::round(sol.x[k]);
        p.lower[k] = v;
        p.upper[k] = v;
        x = rounded(sol.x);
    }
    return x;
}

}  // namespace

AllocationResult allocate(const ShippingInstance& inst, const lp::IlpOptions& opts) {
    const auto p = build_shipping_lp(inst);
    AllocationResult res;
    const auto relax = lp::simplex_solve(p, opts.simplex);
    if (relax.status == lp::LpStatus::Optimal) res.lp_bound = relax.objective;
    const auto sol = lp::ilp_solve(p, opts);
    res.status = sol.status;
    res.nodes = sol.iterations;
    if (sol.status == lp::LpStatus::Optimal) {
        const auto x = lex_refine(inst, p, sol.objective, rounded(sol.x), opts);
        res.plan = evaluate_plan(std::span<const std::int64_t>(x), inst);
        if (!res.plan.report.overall_feasible) {
            throw std::logic_error("allocate: solver returned a plan that fails its own audit");
        }
        res.feasible = true;
        return res;
    }
    if (sol.status != lp::LpStatus::Infeasible) return res;

    // Which constraint groups, dropped one at a time, make the model feasible.
    std::vector<std::string> groups{"demand", "budget"};
    if (inst.alpha > 0.0) groups.emplace_back("fast_service");
    groups.emplace_back("capacity");
    for (const auto& g : groups) {
        auto relaxed = p;
        if (g == "capacity") {
            for (auto& u : relaxed.upper) u = static_cast<double>(inst.D_total);
        } else {
            std::erase_if(relaxed.rows, [&](const lp::LpRow& r) { return r.name == g; });
        }
        if (lp::ilp_solve(relaxed, opts).status == lp::LpStatus::Optimal) res.binding.push_back(g);
    }
    if (res.binding.empty()) res.binding = groups;
    return res;
}

AllocationPlan baseline_all_standard(const ShippingInstance& inst) {
    inst.validate();
    std::size_t cheapest = 0;
    for (std::size_t i = 1; i < inst.modes.size(); ++i) {
        if (inst.modes[i].c < inst.modes[cheapest].c) cheapest = i;
    }
    std::vector<std::int64_t> x(inst.modes.size(), 0);
    x[cheapest] = inst.D_total;
    return evaluate_plan(std::span<const std::int64_t>(x), inst);
}

AllocationPlan baseline_uniform(const ShippingInstance& inst) {
    inst.validate();
    const auto n = static_cast<std::int64_t>(inst.modes.size());
    std::vector<std::int64_t> x(inst.modes.size(), inst.D_total / n);
    std::vector<std::size_t> order(inst.modes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        if (inst.modes[a].t != inst.modes[b].t) return inst.modes[a].t < inst.modes[b].t;
        return inst.modes[a].id < inst.modes[b].id;
    });
    const std::int64_t leftover = inst.D_total % n;
    for (std::int64_t r = 0; r < leftover; ++r) ++x[order[static_cast<std::size_t>(r)]];
    return evaluate_plan(std::span<const std::int64_t>(x), inst);
}

OracleResult oracle_enumerate(const ShippingInstance& inst, std::uint64_t max_points) {
    inst.validate();
    const std::size_t n = inst.modes.size();
    std::vector<std::int64_t> hi(n);
    double points = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        hi[i] = std::min(inst.modes[i].K, inst.D_total);
        if (i + 1 < n) points *= static_cast<double>(hi[i] + 1);
    }
    if (points > static_cast<double>(max_points)) {
        throw std::invalid_argument(fmt::format("oracle_enumerate: {:.3g} grid points exceed the limit of {}", points, max_points));
    }

    const auto order = id_order(inst);
    const auto floor = inst.alpha > 0.0 ? inst.service_floor() : std::int64_t{0};
    OracleResult res;
    std::vector<std::int64_t> x(n, 0), best;
    double best_obj = 0.0;

    // Prefix sums are accumulated in mode order, matching evaluate_plan.
    auto rec = [&](auto&& self, std::size_t i, std::int64_t used, std::int64_t fast, double obj, double cost) -> void {
        const auto& m = inst.modes[i];
        if (i + 1 == n) {
            const std::int64_t v = inst.D_total - used;
            ++res.evaluated;
            if (v < 0 || v > m.K) return;
            x[i] = v;
            const double o = obj + m.t * static_cast<double>(v);
            const double c = cost + m.c * static_cast<double>(v);
            if (!within_budget(c, inst.B)) return;
            if ((m.is_fast ? fast + v : fast) < floor) return;
            if (best.empty() || o < best_obj || (o == best_obj && lex_less(x, best, order))) {
                best = x;
                best_obj = o;
            }
            return;
        }
        for (std::int64_t v = 0; v <= hi[i] && used + v <= inst.D_total; ++v) {
            const double c = cost + m.c * static_cast<double>(v);
            if (!within_budget(c, inst.B)) break;
            x[i] = v;
            self(self, i + 1, used + v, m.is_fast ? fast + v : fast, obj + m.t * static_cast<double>(v), c);
        }
        x[i] = 0;
    };
    rec(rec, 0, 0, 0, 0.0, 0.0);

    if (!best.empty()) {
        res.feasible = true;
        res.plan = evaluate_plan(std::span<const std::int64_t>(best), inst);
    }
    return res;
}

json to_json(const ShippingInstance& inst) {
    json modes = json::array();
    for (const auto& m : inst.modes) {
        modes.push_back({{"id", m.id}, {"t", m.t}, {"c", m.c}, {"K", m.K}, {"is_fast", m.is_fast}});
    }
    return {{"modes", std::move(modes)}, {"D_total", inst.D_total}, {"B", inst.B}, {"alpha", inst.alpha}};
}

ShippingInstance instance_from_json(const json& j) {
    ShippingInstance inst;
    try {
        for (const auto& mj : j.at("modes")) {
            ShippingMode m;
            m.id = mj.at("id").get<std::string>();
            m.t = mj.at("t").get<double>();
            m.c = mj.at("c").get<double>();
            m.K = mj.at("K").get<std::int64_t>();
            m.is_fast = mj.value("is_fast", false);
            inst.modes.push_back(std::move(m));
        }
        inst.D_total = j.at("D_total").get<std::int64_t>();
        inst.B = j.at("B").get<double>();
        inst.alpha = j.at("alpha").get<double>();
    } catch (const json::exception& e) {
        throw DataError(std::string("shipping instance JSON: ") + e.what());
    }
    inst.validate();
    return inst;
}

json to_json(const AllocationPlan& plan) {
    json x = json::object();
    for (std::size_t i = 0; i < plan.modes.size(); ++i) x[plan.modes[i]] = plan.x[i];
    json rows = json::array();
    for (const auto& r : plan.report.rows) {
        rows.push_back({{"name", r.name}, {"satisfied", r.satisfied}, {"slack", r.slack}});
    }
    return {{"x", std::move(x)},
            {"objective", plan.objective},
            {"total_cost", plan.total_cost},
            {"fast_share", plan.fast_share},
            {"feasible", plan.report.overall_feasible},
            {"constraints", std::move(rows)}};
}

json to_json(const AllocationResult& result) {
    json j{{"status", lp::to_string(result.status)}, {"feasible", result.feasible}, {"nodes", result.nodes}};
    if (result.feasible) {
        j["plan"] = to_json(result.plan);
        j["lp_bound"] = result.lp_bound;
    } else {
        j["binding"] = result.binding;
    }
    return j;
}

}  // namespace shipcast::shipping
