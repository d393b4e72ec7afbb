#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "shipcast/lp.hpp"

namespace shipcast::shipping {

struct ShippingMode {
    std::string id;
    double t = 1.0;       // delivery days per unit, > 0
    double c = 0.0;       // cost per unit, >= 0
    std::int64_t K = 0;   // capacity over the horizon
    bool is_fast = false;
};

struct ShippingInstance {
    std::vector<ShippingMode> modes;
    std::int64_t D_total = 0;
    double B = 0.0;
    double alpha = 0.0;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    /// ceil(alpha * D_total), guarded against representation error.
    std::int64_t service_floor() const;
};

/// First Class 2.0 / 1.5 / 560, Same Day 1.0 / 2.5 / 240, Second Class
/// 3.0 / 1.0 / 800, Standard Class 4.0 / 0.8 / 1200; D = 1918, B = 5500,
/// alpha = 0.10, fast set {First Class, Same Day}.
ShippingInstance reference_instance();

struct ConstraintCheck {
    std::string name;
    bool satisfied = true;
    double slack = 0.0;  // negative when violated
};

struct ConstraintReport {
    std::vector<ConstraintCheck> rows;
    bool overall_feasible = true;

    const ConstraintCheck* find(const std::string& name) const;
};

struct AllocationPlan {
    std::vector<std::string> modes;
    std::vector<std::int64_t> x;
    double objective = 0.0;
    double total_cost = 0.0;
    double fast_share = 0.0;
    ConstraintReport report;

    std::int64_t units(const std::string& mode) const;
};

/// Pure re-evaluation of an allocation. Rows: demand, budget, fast_service
/// (only when alpha > 0), capacity_<id> per mode. Budget uses a relative
/// tolerance of 1e-9; every other row is compared exactly.
AllocationPlan evaluate_plan(std::span<const std::int64_t> x, const ShippingInstance& inst);

/// Same, for values that must be nonnegative integers. Throws
/// std::invalid_argument on negative, fractional or non-finite entries.
AllocationPlan evaluate_plan(std::span<const double> x, const ShippingInstance& inst);

/// x_i in [0, K_i] integral, demand row (=), budget row (<=), fast_service
/// row (>= service_floor, omitted when alpha == 0), objective t.
lp::LpProblem build_shipping_lp(const ShippingInstance& inst);

struct AllocationResult {
    bool feasible = false;
    lp::LpStatus status = lp::LpStatus::Infeasible;
    AllocationPlan plan;                 // valid when feasible
    std::vector<std::string> binding;    // constraint groups whose removal restores feasibility
    double lp_bound = 0.0;               // LP relaxation objective
    std::size_t nodes = 0;
};

/// Optimal plan; among optima the lexicographically smallest x with modes
/// taken in ascending id order.
AllocationResult allocate(const ShippingInstance& inst, const lp::IlpOptions& opts = {});

/// Everything on the cheapest mode (first on ties).
AllocationPlan baseline_all_standard(const ShippingInstance& inst);

/// floor(D/|M|) each; leftover units one at a time to the fastest modes
/// (ascending t, then id).
AllocationPlan baseline_uniform(const ShippingInstance& inst);

struct OracleResult {
    bool feasible = false;
    AllocationPlan plan;
    std::uint64_t evaluated = 0;
};

/// Exhaustive search over all integral allocations meeting demand. The last
/// mode is fixed by the demand row, the rest are enumerated; throws
/// std::invalid_argument if that grid exceeds max_points.
OracleResult oracle_enumerate(const ShippingInstance& inst, std::uint64_t max_points = 200'000'000);

nlohmann::json to_json(const ShippingInstance& inst);
ShippingInstance instance_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AllocationPlan& plan);
nlohmann::json to_json(const AllocationResult& result);

}  // namespace shipcast::shipping
