#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace shipcast::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, Equal, GreaterEqual };

struct LpRow {
    std::vector<double> coeffs;
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
    std::string name;
};

/// minimize objective . x  subject to rows and lower <= x <= upper.
/// Bounds may be infinite; integer marks variables for ilp_solve.
struct LpProblem {
    std::vector<double> objective;
    std::vector<LpRow> rows;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<bool> integer;

    /// n continuous variables in [0, +inf).
    static LpProblem with_vars(std::size_t n);

    std::size_t num_vars() const { return objective.size(); }
    void add_row(std::vector<double> coeffs, Sense sense, double rhs, std::string name = {});

    /// Throws std::invalid_argument on mismatched sizes or NaN entries.
    /// Crossed bounds are not an error; solvers report them as infeasible.
    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, LimitReached };

std::string to_string(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    std::size_t iterations = 0;  // simplex pivots, or B&B nodes for ilp_solve
};

struct SimplexOptions {
    std::size_t max_iterations = 100000;
    double tolerance = 1e-9;
};

/// Two-phase primal simplex on a dense tableau. Variable bounds are handled
/// directly (nonbasic at lower or upper), not as extra rows. Bland's rule for
/// entering and leaving choices, so it terminates on degenerate problems.
LpSolution simplex_solve(const LpProblem& p, const SimplexOptions& opts = {});

struct IlpOptions {
    std::size_t node_limit = 200000;
    double integrality_tolerance = 1e-6;
    SimplexOptions simplex{};
};

/// Best-first branch and bound over LP relaxations. Branches on the most
/// fractional integer variable (lowest index on ties); among open nodes with
/// equal bounds the one created first is expanded first. Integer variables
/// are rounded in the returned x and the objective is recomputed from it.
/// Requires finite bounds on every integer variable.
LpSolution ilp_solve(const LpProblem& p, const IlpOptions& opts = {});

/// Largest violation of rows and bounds at x (0 when feasible).
double max_violation(const LpProblem& p, const std::vector<double>& x);

}  // namespace shipcast::lp
