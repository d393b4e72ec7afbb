#include "shipcast/lp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include <fmt/format.h>

namespace shipcast::lp {

LpProblem LpProblem::with_vars(std::size_t n) {
    LpProblem p;
    p.objective.assign(n, 0.0);
    p.lower.assign(n, 0.0);
    p.upper.assign(n, kInf);
    p.integer.assign(n, false);
    return p;
}

void LpProblem::add_row(std::vector<double> coeffs, Sense sense, double rhs, std::string name) {
    rows.push_back(LpRow{std::move(coeffs), sense, rhs, std::move(name)});
}

void LpProblem::validate() const {
    const std::size_t n = objective.size();
    if (lower.size() != n || upper.size() != n || integer.size() != n) {
        throw std::invalid_argument(fmt::format("LpProblem: {} objective coefficients but {} lower, {} upper, {} integer flags",
                                                n, lower.size(), upper.size(), integer.size()));
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(objective[j])) throw std::invalid_argument("LpProblem: objective coefficients must be finite");
        if (std::isnan(lower[j]) || std::isnan(upper[j])) throw std::invalid_argument("LpProblem: NaN bound");
        if (lower[j] == kInf || upper[j] == -kInf) throw std::invalid_argument("LpProblem: bound on the wrong side of infinity");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.coeffs.size() != n) {
            throw std::invalid_argument(fmt::format("LpProblem: row {} has {} coefficients, expected {}", i, r.coeffs.size(), n));
        }
        if (!std::isfinite(r.rhs)) throw std::invalid_argument(fmt::format("LpProblem: row {} has a non-finite rhs", i));
        for (double a : r.coeffs) {
            if (!std::isfinite(a)) throw std::invalid_argument(fmt::format("LpProblem: row {} has a non-finite coefficient", i));
        }
    }
}

std::string to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::LimitReached: return "limit_reached";
    }
    return "unknown";
}

double max_violation(const LpProblem& p, const std::vector<double>& x) {
    double worst = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        worst = std::max({worst, p.lower[j] - x[j], x[j] - p.upper[j]});
    }
    for (const auto& r : p.rows) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) lhs += r.coeffs[j] * x[j];
        switch (r.sense) {
            case Sense::LessEqual: worst = std::max(worst, lhs - r.rhs); break;
            case Sense::GreaterEqual: worst = std::max(worst, r.rhs - lhs); break;
            case Sense::Equal: worst = std::max(worst, std::abs(lhs - r.rhs)); break;
        }
    }
    return worst;
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;

// How an original variable is expressed through nonnegative tableau columns.
struct VarMap {
    enum Kind { Shift, Flip, Split } kind;
    std::size_t col;
    double offset;  // lower for Shift, upper for Flip
};

// Dense tableau for  min c.y  s.t.  T y = xB-consistent, 0 <= y <= u.
class Tableau {
public:
    Tableau(std::size_t m, std::size_t n) : m_(m), n_(n), t_(m * n, 0.0), u_(n, kInf), at_upper_(n, false), basis_(m), xb_(m) {}

    double& at(std::size_t i, std::size_t j) { return t_[i * n_ + j]; }
    double at(std::size_t i, std::size_t j) const { return t_[i * n_ + j]; }

    std::size_t m_, n_;
    std::vector<double> t_;
    std::vector<double> u_;
    std::vector<bool> at_upper_;
    std::vector<std::size_t> basis_;
    std::vector<double> xb_;
    std::size_t iterations = 0;

    enum class Outcome { Optimal, Unbounded, Limit };

    Outcome run(const std::vector<double>& cost, const std::vector<bool>& can_enter, const SimplexOptions& opts) {
        std::vector<bool> is_basic(n_, false);
        for (auto b : basis_) is_basic[b] = true;
        std::vector<double> d(cost);
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = cost[basis_[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < n_; ++j) d[j] -= cb * at(i, j);
        }
        const double tol = opts.tolerance;
        while (true) {
            std::size_t enter = n_;
            for (std::size_t j = 0; j < n_; ++j) {
                if (is_basic[j] || !can_enter[j]) continue;
                if ((!at_upper_[j] && d[j] < -tol) || (at_upper_[j] && d[j] > tol)) {
                    enter = j;
                    break;
                }
            }
            if (enter == n_) return Outcome::Optimal;
            if (iterations >= opts.max_iterations) return Outcome::Limit;
            ++iterations;

            const double dir = at_upper_[enter] ? -1.0 : 1.0;
            double theta = u_[enter];
            std::size_t leave = m_;
            for (std::size_t i = 0; i < m_; ++i) {
                const double delta = -dir * at(i, enter);
                double lim;
                if (delta < -kPivotTol) {
                    lim = std::max(xb_[i], 0.0) / -delta;
                } else if (delta > kPivotTol && std::isfinite(u_[basis_[i]])) {
                    lim = std::max(u_[basis_[i]] - xb_[i], 0.0) / delta;
                } else {
                    continue;
                }
                if (lim < theta - 1e-12) {
                    theta = lim;
                    leave = i;
                } else if (leave < m_ && lim <= theta + 1e-12 && basis_[i] < basis_[leave]) {
                    leave = i;
                }
            }
            if (!std::isfinite(theta)) return Outcome::Unbounded;

            for (std::size_t i = 0; i < m_; ++i) xb_[i] += -dir * at(i, enter) * theta;
            if (leave == m_) {
                at_upper_[enter] = !at_upper_[enter];
                continue;
            }

            const std::size_t out = basis_[leave];
            at_upper_[out] = (-dir * at(leave, enter)) > 0.0;
            const double entered_value = dir > 0 ? theta : u_[enter] - theta;

            const double piv = at(leave, enter);
            for (std::size_t j = 0; j < n_; ++j) at(leave, j) /= piv;
            at(leave, enter) = 1.0;
            for (std::size_t i = 0; i < m_; ++i) {
                if (i == leave) continue;
                const double f = at(i, enter);
                if (f == 0.0) continue;
                for (std::size_t j = 0; j < n_; ++j) at(i, j) -= f * at(leave, j);
                at(i, enter) = 0.0;
            }
            const double fd = d[enter];
            for (std::size_t j = 0; j < n_; ++j) d[j] -= fd * at(leave, j);
            d[enter] = 0.0;

            basis_[leave] = enter;
            xb_[leave] = entered_value;
            is_basic[out] = false;
            is_basic[enter] = true;
            at_upper_[enter] = false;
        }
    }

    double value(std::size_t j) const {
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] == j) return xb_[i];
        }
        return at_upper_[j] ? u_[j] : 0.0;
    }
};

}  // namespace

LpSolution simplex_solve(const LpProblem& p, const SimplexOptions& opts) {
    p.validate();
    const std::size_t n = p.num_vars();
    LpSolution sol;
    for (std::size_t j = 0; j < n; ++j) {
        if (p.lower[j] > p.upper[j]) return sol;  // crossed bounds: infeasible
    }

    std::vector<VarMap> maps;
    std::vector<double> col_upper;
    for (std::size_t j = 0; j < n; ++j) {
        if (std::isfinite(p.lower[j])) {
            maps.push_back({VarMap::Shift, col_upper.size(), p.lower[j]});
            col_upper.push_back(p.upper[j] - p.lower[j]);
        } else if (std::isfinite(p.upper[j])) {
            maps.push_back({VarMap::Flip, col_upper.size(), p.upper[j]});
            col_upper.push_back(kInf);
        } else {
            maps.push_back({VarMap::Split, col_upper.size(), 0.0});
            col_upper.push_back(kInf);
            col_upper.push_back(kInf);
        }
    }
    const std::size_t ny = col_upper.size();
    const std::size_t m = p.rows.size();
    std::size_t ns = 0;
    for (const auto& r : p.rows) ns += r.sense != Sense::Equal;
    const std::size_t total = ny + ns + m;

    Tableau tab(m, total);
    std::vector<double> cost2(total, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const auto& mp = maps[j];
        const double c = p.objective[j];
        if (mp.kind == VarMap::Flip) {
            cost2[mp.col] = -c;
        } else {
            cost2[mp.col] = c;
            if (mp.kind == VarMap::Split) cost2[mp.col + 1] = -c;
        }
    }
    for (std::size_t j = 0; j < ny; ++j) tab.u_[j] = col_upper[j];

    std::size_t slack = ny;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& r = p.rows[i];
        double rhs = r.rhs;
        for (std::size_t j = 0; j < n; ++j) {
            const double a = r.coeffs[j];
            if (a == 0.0) continue;
            const auto& mp = maps[j];
            switch (mp.kind) {
                case VarMap::Shift:
                    tab.at(i, mp.col) = a;
                    rhs -= a * mp.offset;
                    break;
                case VarMap::Flip:
                    tab.at(i, mp.col) = -a;
                    rhs -= a * mp.offset;
                    break;
                case VarMap::Split:
                    tab.at(i, mp.col) = a;
                    tab.at(i, mp.col + 1) = -a;
                    break;
            }
        }
        if (r.sense == Sense::LessEqual) tab.at(i, slack++) = 1.0;
        if (r.sense == Sense::GreaterEqual) tab.at(i, slack++) = -1.0;
        if (rhs < 0.0) {
            for (std::size_t j = 0; j < ny + ns; ++j) tab.at(i, j) = -tab.at(i, j);
            rhs = -rhs;
        }
        tab.at(i, ny + ns + i) = 1.0;
        tab.basis_[i] = ny + ns + i;
        tab.xb_[i] = rhs;
    }

    std::vector<double> cost1(total, 0.0);
    for (std::size_t i = 0; i < m; ++i) cost1[ny + ns + i] = 1.0;
    std::vector<bool> can_enter(total, true);
    auto outcome = tab.run(cost1, can_enter, opts);
    sol.iterations = tab.iterations;
    if (outcome == Tableau::Outcome::Limit) {
        sol.status = LpStatus::LimitReached;
        return sol;
    }
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (tab.basis_[i] >= ny + ns) infeas += tab.xb_[i];
    }
    if (infeas > kFeasTol) return sol;

    for (std::size_t i = 0; i < m; ++i) {
        tab.u_[ny + ns + i] = 0.0;
        can_enter[ny + ns + i] = false;
    }
    outcome = tab.run(cost2, can_enter, opts);
    sol.iterations = tab.iterations;
    if (outcome == Tableau::Outcome::Limit) {
        sol.status = LpStatus::LimitReached;
        return sol;
    }
    if (outcome == Tableau::Outcome::Unbounded) {
        sol.status = LpStatus::Unbounded;
        return sol;
    }

    sol.x.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const auto& mp = maps[j];
        switch (mp.kind) {
            case VarMap::Shift: sol.x[j] = mp.offset + tab.value(mp.col); break;
            case VarMap::Flip: sol.x[j] = mp.offset - tab.value(mp.col); break;
            case VarMap::Split: sol.x[j] = tab.value(mp.col) - tab.value(mp.col + 1); break;
        }
        sol.x[j] = std::clamp(sol.x[j], p.lower[j], p.upper[j]);
    }
    sol.status = LpStatus::Optimal;
    for (std::size_t j = 0; j < n; ++j) sol.objective += p.objective[j] * sol.x[j];
    return sol;
}

namespace {

struct Node {
    double bound;
    std::size_t seq;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> x;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.seq > b.seq;
    }
};

// Index of the most fractional integer variable, or n when x is integral.
std::size_t branching_var(const LpProblem& p, const std::vector<double>& x, double tol) {
    std::size_t best = x.size();
    double best_frac = tol;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!p.integer[j]) continue;
        const double f = std::abs(x[j] - std::round(x[j]));
        if (f > best_frac) {
            best_frac = f;
            best = j;
        }
    }
    return best;
}

}  // namespace

LpSolution ilp_solve(const LpProblem& p, const IlpOptions& opts) {
    p.validate();
    const std::size_t n = p.num_vars();
    const double tol = opts.integrality_tolerance;
    LpProblem work = p;
    for (std::size_t j = 0; j < n; ++j) {
        if (!p.integer[j]) continue;
        if (!std::isfinite(p.lower[j]) || !std::isfinite(p.upper[j])) {
            throw std::invalid_argument(fmt::format("ilp_solve: integer variable {} needs finite bounds", j));
        }
        work.lower[j] = std::ceil(p.lower[j] - tol);
        work.upper[j] = std::floor(p.upper[j] + tol);
    }

    LpSolution best;
    best.status = LpStatus::Infeasible;
    double incumbent = kInf;
    std::size_t nodes = 0;
    std::size_t seq = 0;
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;

    auto finish = [&](LpStatus status) {
        best.iterations = nodes;
        if (status != LpStatus::Optimal || best.x.empty()) {
            best.status = best.x.empty() && status == LpStatus::Optimal ? LpStatus::Infeasible : status;
        } else {
            best.status = LpStatus::Optimal;
        }
        return best;
    };

    auto improves = [&](double obj) { return obj < incumbent - 1e-9 * (1.0 + std::abs(incumbent == kInf ? 0.0 : incumbent)); };

    // Solves the relaxation under the node's bounds; records integral
    // improvements, queues fractional ones. Returns false on unboundedness.
    auto consider = [&](std::vector<double> lo, std::vector<double> hi) {
        work.lower = std::move(lo);
        work.upper = std::move(hi);
        const auto rel = simplex_solve(work, opts.simplex);
        ++nodes;
        if (rel.status == LpStatus::Unbounded) return false;
        if (rel.status != LpStatus::Optimal || !improves(rel.objective)) return true;
        if (branching_var(p, rel.x, tol) == n) {
            best.x = rel.x;
            for (std::size_t j = 0; j < n; ++j) {
                if (p.integer[j]) best.x[j] = std::round(best.x[j]);
            }
            best.objective = 0.0;
            for (std::size_t j = 0; j < n; ++j) best.objective += p.objective[j] * best.x[j];
            incumbent = best.objective;
        } else {
            open.push(Node{rel.objective, seq++, work.lower, work.upper, rel.x});
        }
        return true;
    };

    if (!consider(work.lower, work.upper)) return finish(LpStatus::Unbounded);
    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        if (!improves(node.bound)) continue;
        if (nodes >= opts.node_limit) return finish(LpStatus::LimitReached);
        const std::size_t k = branching_var(p, node.x, tol);
        auto down_hi = node.upper;
        down_hi[k] = std::floor(node.x[k]);
        if (!consider(node.lower, std::move(down_hi))) return finish(LpStatus::Unbounded);
        auto up_lo = std::move(node.lower);
        up_lo[k] = std::ceil(node.x[k]);
        if (!consider(std::move(up_lo), std::move(node.upper))) return finish(LpStatus::Unbounded);
    }
    return finish(LpStatus::Optimal);
}

}  // namespace shipcast::lp
