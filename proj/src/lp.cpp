#include "dynramp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace dynramp {

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::GapLimit: return "gap-limit";
        case SolveStatus::NodeLimit: return "node-limit";
        case SolveStatus::NumericalFailure: return "numerical-failure";
    }
    return "?";
}

std::int32_t MilpProblem::add_var(const std::string& name, double lo, double hi, double obj) {
    lower.push_back(lo);
    upper.push_back(hi);
    objective.push_back(obj);
    var_names.push_back(name);
    return static_cast<std::int32_t>(lower.size()) - 1;
}

void MilpProblem::add_binary(std::int32_t var) {
    auto it = std::lower_bound(binaries.begin(), binaries.end(), var);
    if (it == binaries.end() || *it != var) binaries.insert(it, var);
}

SparseRow& MilpProblem::add_row(RowSense sense, double rhs, const std::string& name, bool lazy) {
    SparseRow r;
    r.sense = sense;
    r.rhs = rhs;
    r.name = name;
    r.lazy = lazy;
    rows.push_back(std::move(r));
    return rows.back();
}

void MilpProblem::validate() const {
    const std::int32_t n = num_vars();
    if (upper.size() != lower.size() || objective.size() != lower.size() ||
        var_names.size() != lower.size())
        throw LpError(name + ": inconsistent variable arrays");
    for (std::int32_t j = 0; j < n; ++j)
        if (lower[j] > upper[j])
            throw LpError(name + ": variable '" + var_names[j] + "' has lower > upper");
    std::vector<std::int64_t> stamp(n, -1);
    std::int64_t row_id = 0;
    for (const auto& r : rows) {
        if (r.idx.size() != r.val.size()) throw LpError(name + ": ragged row '" + r.name + "'");
        for (std::int32_t j : r.idx) {
            if (j < 0 || j >= n) throw LpError(name + ": row '" + r.name + "' index out of range");
            if (stamp[j] == row_id) throw LpError(name + ": row '" + r.name + "' has duplicate entries");
            stamp[j] = row_id;
        }
        ++row_id;
    }
    for (std::int32_t b : binaries) {
        if (b < 0 || b >= n) throw LpError(name + ": binary index out of range");
        if (lower[b] < -1e-12 || upper[b] > 1.0 + 1e-12)
            throw LpError(name + ": binary '" + var_names[b] + "' bounds outside [0,1]");
    }
}

double MilpProblem::max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (std::int32_t j = 0; j < num_vars(); ++j) {
        worst = std::max(worst, lower[j] - x[j]);
        worst = std::max(worst, x[j] - upper[j]);
    }
    for (const auto& r : rows) {
        double a = 0.0;
        for (std::size_t k = 0; k < r.idx.size(); ++k) a += r.val[k] * x[r.idx[k]];
        switch (r.sense) {
            case RowSense::LE: worst = std::max(worst, a - r.rhs); break;
            case RowSense::GE: worst = std::max(worst, r.rhs - a); break;
            case RowSense::EQ: worst = std::max(worst, std::abs(a - r.rhs)); break;
        }
    }
    return worst;
}

// ============================================================================
// Bounded-variable primal simplex core.

namespace {

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, FreeZero };

struct LpCore {
    const MilpProblem* p = nullptr;
    SolverOptions opt;

    // Column-compressed copy of the full constraint matrix.
    std::vector<std::vector<std::pair<std::int32_t, double>>> csc;

    // Active rows.
    std::vector<std::int32_t> active;           // problem row indices
    std::vector<std::int32_t> rowpos;           // row index -> active position or -1
    std::vector<double> rscale;                 // per active position
    std::vector<double> rhs;                    // scaled rhs per active position

    // Internal columns: [0, n) structural, then one slack per active row,
    // then artificials. Slack for position i has +1 in row i; artificials too.
    std::int32_t n = 0;
    std::vector<double> lo, up, c2;             // bounds and phase-2 costs
    std::vector<double> c1;                     // phase-1 costs
    std::vector<std::int32_t> unit_row;         // for slack/artificial columns
    std::vector<bool> is_art;                   // aligned with unit_row
    std::vector<std::int32_t> slack_col;        // slack column per active position
    std::vector<VarState> state;
    std::vector<double> value;

    std::vector<std::int32_t> basis;            // basic column per active position
    long iterations = 0;

    // Dense LU of the basis with partial pivoting + product-form etas.
    std::vector<double> lu;                     // m*m, row-major
    std::vector<std::int32_t> piv;
    struct Eta {
        std::int32_t r;
        std::vector<double> w;
    };
    std::vector<Eta> etas;
    int pivots_since_refactor = 0;

    std::size_t m() const { return active.size(); }
    std::size_t cols() const { return lo.size(); }

    bool is_unit_col(std::int32_t j) const { return j >= n; }

    void column(std::int32_t j, std::vector<double>& dense) const {
        std::fill(dense.begin(), dense.end(), 0.0);
        if (is_unit_col(j)) {
            dense[unit_row[j - n]] = 1.0;
            return;
        }
        for (const auto& [row, v] : csc[j]) {
            std::int32_t pos = rowpos[row];
            if (pos >= 0) dense[pos] = v * rscale[pos];
        }
    }

    // The basis always contains at most n non-unit columns; every other
    // column is a row slack (a unit vector). Factorizing only the k x k core
    // over uncovered rows keeps the cost independent of the active row count.
    std::vector<std::int32_t> u_rows;     // uncovered row positions (size k)
    std::vector<std::int32_t> row_to_u;   // row position -> index in u_rows or -1
    std::vector<std::int32_t> c_pos;      // basis positions holding core columns
    // (position, covered row) pairs frozen at refactor time; the basis array
    // itself changes with every pivot and must not be reread here.
    std::vector<std::pair<std::int32_t, std::int32_t>> cover_map;
    std::vector<std::vector<std::pair<std::int32_t, double>>> b21;  // per core col
    std::vector<double> core_lu;          // k x k, row-major
    std::vector<std::int32_t> core_piv;

    bool refactor() {
        const std::size_t mm = m();
        row_to_u.assign(mm, -2);  // -2 unknown, -1 covered, >=0 index in u_rows
        cover_map.clear();
        c_pos.clear();
        bool ok = true;
        for (std::size_t i = 0; i < mm; ++i) {
            std::int32_t bj = basis[i];
            if (is_unit_col(bj)) {
                std::int32_t r = unit_row[bj - n];
                if (row_to_u[r] == -1) ok = false;  // duplicate unit column
                row_to_u[r] = -1;
                cover_map.push_back({static_cast<std::int32_t>(i), r});
            } else {
                c_pos.push_back(static_cast<std::int32_t>(i));
            }
        }
        u_rows.clear();
        for (std::size_t r = 0; r < mm; ++r)
            if (row_to_u[r] == -2) {
                row_to_u[r] = static_cast<std::int32_t>(u_rows.size());
                u_rows.push_back(static_cast<std::int32_t>(r));
            }
        const std::size_t k = u_rows.size();
        if (!ok || k != c_pos.size()) {
            singular_ = true;
        }

        b21.assign(c_pos.size(), {});
        core_lu.assign(k * k, 0.0);
        core_piv.assign(k, 0);
        std::vector<double> col(mm);
        for (std::size_t t = 0; t < c_pos.size() && t < k; ++t) {
            column(basis[c_pos[t]], col);
            for (std::size_t r = 0; r < mm; ++r) {
                if (col[r] == 0.0) continue;
                std::int32_t ui = row_to_u[r];
                if (ui >= 0) core_lu[static_cast<std::size_t>(ui) * k + t] = col[r];
                else b21[t].push_back({static_cast<std::int32_t>(r), col[r]});
            }
        }
        for (std::size_t kk = 0; kk < k; ++kk) {
            std::size_t pr = kk;
            double best = std::abs(core_lu[kk * k + kk]);
            for (std::size_t r = kk + 1; r < k; ++r) {
                double v = std::abs(core_lu[r * k + kk]);
                if (v > best) {
                    best = v;
                    pr = r;
                }
            }
            core_piv[kk] = static_cast<std::int32_t>(pr);
            if (pr != kk)
                for (std::size_t cidx = 0; cidx < k; ++cidx)
                    std::swap(core_lu[kk * k + cidx], core_lu[pr * k + cidx]);
            double d = core_lu[kk * k + kk];
            if (std::abs(d) < 1e-12) {
                singular_ = true;
                core_lu[kk * k + kk] = d = (d >= 0 ? 1e-12 : -1e-12);
            }
            for (std::size_t r = kk + 1; r < k; ++r) {
                double f = core_lu[r * k + kk] / d;
                core_lu[r * k + kk] = f;
                if (f != 0.0)
                    for (std::size_t cidx = kk + 1; cidx < k; ++cidx)
                        core_lu[r * k + cidx] -= f * core_lu[kk * k + cidx];
            }
        }
        etas.clear();
        pivots_since_refactor = 0;
        bool result = !singular_;
        singular_ = false;
        return result;
    }

    void core_solve(std::vector<double>& z) const {  // core_lu (k x k) z = z
        const std::size_t k = u_rows.size();
        for (std::size_t kk = 0; kk < k; ++kk)
            if (core_piv[kk] != static_cast<std::int32_t>(kk))
                std::swap(z[kk], z[core_piv[kk]]);
        for (std::size_t kk = 0; kk < k; ++kk) {
            double zk = z[kk];
            if (zk != 0.0)
                for (std::size_t r = kk + 1; r < k; ++r) z[r] -= core_lu[r * k + kk] * zk;
        }
        for (std::size_t kk = k; kk-- > 0;) {
            double v = z[kk];
            for (std::size_t cidx = kk + 1; cidx < k; ++cidx)
                v -= core_lu[kk * k + cidx] * z[cidx];
            z[kk] = v / core_lu[kk * k + kk];
        }
    }

    void core_solve_t(std::vector<double>& z) const {  // core_lu^T z = z
        const std::size_t k = u_rows.size();
        for (std::size_t kk = 0; kk < k; ++kk) {
            double v = z[kk];
            for (std::size_t r = 0; r < kk; ++r) v -= core_lu[r * k + kk] * z[r];
            z[kk] = v / core_lu[kk * k + kk];
        }
        for (std::size_t kk = k; kk-- > 0;) {
            double v = z[kk];
            for (std::size_t r = kk + 1; r < k; ++r) v -= core_lu[r * k + kk] * z[r];
            z[kk] = v;
        }
        for (std::size_t kk = k; kk-- > 0;)
            if (core_piv[kk] != static_cast<std::int32_t>(kk))
                std::swap(z[kk], z[core_piv[kk]]);
    }

    mutable bool singular_ = false;

    // Cold nonbasic placement: the finite bound nearest zero.
    void cold_state(std::int32_t j, VarState* st, double* v) const {
        if (lo[j] == -kInf && up[j] == kInf) {
            *st = VarState::FreeZero;
            *v = 0.0;
        } else if (lo[j] == -kInf) {
            *st = VarState::AtUpper;
            *v = up[j];
        } else if (up[j] == kInf) {
            *st = VarState::AtLower;
            *v = lo[j];
        } else if (std::abs(lo[j]) <= std::abs(up[j])) {
            *st = VarState::AtLower;
            *v = lo[j];
        } else {
            *st = VarState::AtUpper;
            *v = up[j];
        }
    }

    void reset_to_slack_basis() {
        for (std::int32_t j = 0; j < n; ++j) {
            VarState st;
            double v;
            cold_state(j, &st, &v);
            state[j] = st;
            value[j] = v;
        }
        for (std::size_t k = 0; k < unit_row.size(); ++k) {
            std::int32_t col = n + static_cast<std::int32_t>(k);
            VarState st;
            double v;
            cold_state(col, &st, &v);
            state[col] = st;
            value[col] = v;
        }
        for (std::size_t i = 0; i < m(); ++i) {
            basis[i] = slack_col[i];
            state[slack_col[i]] = VarState::Basic;
        }
    }

    // x := B^{-1} x
    void ftran(std::vector<double>& x) const {
        const std::size_t mm = m();
        const std::size_t k = u_rows.size();
        // Solve for the core columns from the uncovered rows, then peel the
        // unit columns off the covered rows.
        const std::size_t kc = std::min(k, c_pos.size());
        std::vector<double> z(k, 0.0);
        for (std::size_t t = 0; t < k; ++t) z[t] = x[u_rows[t]];
        core_solve(z);
        std::vector<double> out(mm);
        for (std::size_t t = 0; t < kc; ++t) {
            out[c_pos[t]] = z[t];
            for (const auto& [r, v] : b21[t]) x[r] -= v * z[t];
        }
        for (const auto& [pos, row] : cover_map) out[pos] = x[row];
        x = std::move(out);
        for (const auto& e : etas) {
            double xr = x[e.r] / e.w[e.r];
            if (xr != 0.0) {
                for (std::size_t i = 0; i < mm; ++i) x[i] -= e.w[i] * xr;
                x[e.r] = xr;
            } else {
                x[e.r] = 0.0;
            }
        }
    }

    // y := (B^T)^{-1} y  (i.e. y^T B = c^T solved for y)
    void btran(std::vector<double>& y) const {
        const std::size_t mm = m();
        const std::size_t k = u_rows.size();
        for (std::size_t t = etas.size(); t-- > 0;) {
            const Eta& e = etas[t];
            double acc = y[e.r];
            for (std::size_t i = 0; i < mm; ++i)
                if (i != static_cast<std::size_t>(e.r)) acc -= y[i] * e.w[i];
            y[e.r] = acc / e.w[e.r];
        }
        // Covered rows take their dual directly from the unit columns; the
        // core then solves over the uncovered rows with an adjusted rhs.
        std::vector<double> yr(mm, 0.0);
        for (const auto& [pos, row] : cover_map) yr[row] = y[pos];
        const std::size_t kc = std::min(k, c_pos.size());
        std::vector<double> rhs(k, 0.0);
        for (std::size_t t = 0; t < kc; ++t) {
            double v = y[c_pos[t]];
            for (const auto& [r, bv] : b21[t]) v -= bv * yr[r];
            rhs[t] = v;
        }
        core_solve_t(rhs);
        for (std::size_t t = 0; t < k; ++t) yr[u_rows[t]] = rhs[t];
        y = std::move(yr);
    }

    void recompute_basics() {
        const std::size_t mm = m();
        std::vector<double> r = rhs;
        std::vector<double> col(mm);
        for (std::size_t j = 0; j < cols(); ++j) {
            if (state[j] == VarState::Basic) continue;
            double v = value[j];
            if (v == 0.0) continue;
            std::int32_t jj = static_cast<std::int32_t>(j);
            if (is_unit_col(jj)) {
                r[unit_row[jj - n]] -= v;
            } else {
                for (const auto& [row, av] : csc[jj]) {
                    std::int32_t pos = rowpos[row];
                    if (pos >= 0) r[pos] -= av * rscale[pos] * v;
                }
            }
        }
        ftran(r);
        for (std::size_t i = 0; i < mm; ++i) value[basis[i]] = r[i];
    }

    double phase_objective(const std::vector<double>& c) const {
        double obj = 0.0;
        for (std::size_t j = 0; j < cols(); ++j)
            if (c[j] != 0.0) obj += c[j] * value[j];
        return obj;
    }
};

struct SimplexResult {
    enum Kind { Optimal, Infeasible, Unbounded, IterLimit, Numerical } kind = Optimal;
    std::vector<double> ray;  // structural-space direction when Unbounded
};

// Runs the simplex on the given phase cost vector until optimality.
SimplexResult run_simplex(LpCore& core, const std::vector<double>& cost, bool phase1) {
    const double dual_tol = 1e-9;
    const double pivot_tol = 1e-10;
    const std::size_t mm = core.m();

    bool bland = false;
    long no_progress = 0;
    double last_obj = core.phase_objective(cost);
    const long stall_limit =
        std::min<long>(10 * static_cast<long>(mm + core.cols()), 500);

    std::vector<double> y(mm), w(mm);
    for (;;) {
        if (core.iterations++ > core.opt.iteration_limit) return {SimplexResult::IterLimit, {}};
        if (phase1 && last_obj <= core.opt.feas_tol) return {SimplexResult::Optimal, {}};

        // Reduced costs via duals of the basis.
        for (std::size_t i = 0; i < mm; ++i) y[i] = cost[core.basis[i]];
        core.btran(y);

        std::vector<double> d(core.cols());
        for (std::size_t j = 0; j < core.cols(); ++j) d[j] = cost[j];
        // Structural columns via row representation.
        for (std::size_t i = 0; i < mm; ++i) {
            double yi = y[i];
            if (yi == 0.0) continue;
            const SparseRow& row = core.p->rows[core.active[i]];
            double ys = yi * core.rscale[i];
            for (std::size_t k = 0; k < row.idx.size(); ++k) d[row.idx[k]] -= ys * row.val[k];
        }
        for (std::size_t j = core.n; j < core.cols(); ++j)
            d[j] -= y[core.unit_row[j - core.n]];

        // Pricing.
        std::int32_t q = -1;
        double best = dual_tol;
        int dir = 0;
        for (std::size_t j = 0; j < core.cols(); ++j) {
            VarState st = core.state[j];
            if (st == VarState::Basic) continue;
            if (core.lo[j] == core.up[j]) continue;  // fixed
            double dj = d[j];
            int sigma = 0;
            if (st == VarState::AtLower && dj < -dual_tol) sigma = +1;
            else if (st == VarState::AtUpper && dj > dual_tol) sigma = -1;
            else if (st == VarState::FreeZero && std::abs(dj) > dual_tol)
                sigma = dj > 0 ? -1 : +1;
            if (!sigma) continue;
            if (bland) {
                q = static_cast<std::int32_t>(j);
                dir = sigma;
                break;
            }
            if (std::abs(dj) > best) {
                best = std::abs(dj);
                q = static_cast<std::int32_t>(j);
                dir = sigma;
            }
        }
        if (q < 0) {
            if (phase1) return {SimplexResult::Optimal, {}};  // caller checks objective
            return {SimplexResult::Optimal, {}};
        }

        core.column(q, w);
        core.ftran(w);

        // Ratio test. Entering moves by t*dir; basic i changes by -dir*t*w[i].
        double t_row = kInf;
        std::int32_t leave_pos = -1;
        int leave_side = 0;  // -1 lower, +1 upper
        for (std::size_t i = 0; i < mm; ++i) {
            double wi = w[i];
            if (std::abs(wi) <= pivot_tol) continue;
            double delta = -dir * wi;
            std::int32_t bj = core.basis[i];
            double t;
            int side;
            if (delta < 0.0) {
                if (core.lo[bj] == -kInf) continue;
                t = (core.value[bj] - core.lo[bj]) / (-delta);
                side = -1;
            } else {
                if (core.up[bj] == kInf) continue;
                t = (core.up[bj] - core.value[bj]) / delta;
                side = +1;
            }
            if (t < 0.0) t = 0.0;
            bool take = false;
            if (leave_pos < 0 || t < t_row - 1e-12) {
                take = true;
            } else if (t < t_row + 1e-12) {
                // Tie break: Bland wants the lowest column index, otherwise
                // prefer the larger pivot element for stability.
                take = bland ? core.basis[i] < core.basis[leave_pos]
                             : std::abs(wi) > std::abs(w[leave_pos]);
            }
            if (take) {
                t_row = t;
                leave_pos = static_cast<std::int32_t>(i);
                leave_side = side;
            }
        }
        const double t_flip = core.up[q] - core.lo[q];

        if (leave_pos < 0 && t_flip == kInf) {
            // No blocking row and no opposite bound: unbounded direction.
            std::vector<double> ray(core.n, 0.0);
            if (q < core.n) ray[q] = dir;
            for (std::size_t i = 0; i < mm; ++i) {
                std::int32_t bj = core.basis[i];
                if (bj < core.n && std::abs(w[i]) > pivot_tol) ray[bj] = -dir * w[i];
            }
            return {SimplexResult::Unbounded, std::move(ray)};
        }

        const bool flip = (leave_pos < 0) || t_flip < t_row - 1e-12;
        const double t = flip ? t_flip : t_row;
        // Apply the step.
        if (t != 0.0) {
            for (std::size_t i = 0; i < mm; ++i) {
                double wi = w[i];
                if (wi != 0.0) core.value[core.basis[i]] -= dir * t * wi;
            }
            core.value[q] += dir * t;
        }

        if (flip) {
            core.state[q] = (dir > 0) ? VarState::AtUpper : VarState::AtLower;
            core.value[q] = (dir > 0) ? core.up[q] : core.lo[q];
        } else {
            std::int32_t leaving = core.basis[leave_pos];
            core.state[leaving] = (leave_side < 0) ? VarState::AtLower : VarState::AtUpper;
            core.value[leaving] = (leave_side < 0) ? core.lo[leaving] : core.up[leaving];
            core.basis[leave_pos] = q;
            core.state[q] = VarState::Basic;
            LpCore::Eta e;
            e.r = leave_pos;
            e.w = w;
            core.etas.push_back(std::move(e));
            if (++core.pivots_since_refactor >= 64) {
                core.refactor();
                core.recompute_basics();
            }
        }

        double obj = core.phase_objective(cost);
        if (obj < last_obj - 1e-13 * (1.0 + std::abs(last_obj))) {
            no_progress = 0;
        } else if (++no_progress > stall_limit && !bland) {
            bland = true;
        }
        last_obj = obj;
    }
}

// Dual simplex repair: from a dual-feasible basis (reduced costs consistent
// with the nonbasic states for the phase-2 costs), drives bound-violating
// basics out of the basis. This is the cheap reoptimization path after
// branching bound changes and lazy row activation.
enum class DualRepair { Feasible, Infeasible, GiveUp };

DualRepair dual_repair(LpCore& core) {
    const double pivot_tol = 1e-9;
    const double dual_tol = 1e-7;
    const std::size_t mm = core.m();
    const long budget = 4 * static_cast<long>(mm + core.cols()) + 200;

    // Reduced costs for all columns (basic entries unused).
    std::vector<double> y(mm);
    for (std::size_t i = 0; i < mm; ++i) y[i] = core.c2[core.basis[i]];
    core.btran(y);
    std::vector<double> d(core.cols());
    for (std::size_t j = 0; j < core.cols(); ++j) d[j] = core.c2[j];
    for (std::size_t i = 0; i < mm; ++i) {
        double yi = y[i];
        if (yi == 0.0) continue;
        const SparseRow& row = core.p->rows[core.active[i]];
        double ys = yi * core.rscale[i];
        for (std::size_t k = 0; k < row.idx.size(); ++k) d[row.idx[k]] -= ys * row.val[k];
    }
    for (std::size_t j = core.n; j < core.cols(); ++j) d[j] -= y[core.unit_row[j - core.n]];

    // Check dual feasibility; if it does not hold, this path cannot be used.
    for (std::size_t j = 0; j < core.cols(); ++j) {
        if (core.state[j] == VarState::Basic) continue;
        if (core.lo[j] == core.up[j]) continue;
        if (core.state[j] == VarState::AtLower && d[j] < -dual_tol) return DualRepair::GiveUp;
        if (core.state[j] == VarState::AtUpper && d[j] > dual_tol) return DualRepair::GiveUp;
        if (core.state[j] == VarState::FreeZero && std::abs(d[j]) > dual_tol)
            return DualRepair::GiveUp;
    }

    std::vector<double> er(mm), alpha(core.cols()), w(mm);
    double best_total_viol = kInf;
    long since_progress = 0;
    for (long iter = 0; iter < budget; ++iter) {
        {
            double total = 0.0;
            for (std::size_t i = 0; i < mm; ++i) {
                std::int32_t bj = core.basis[i];
                total += std::max(0.0, core.value[bj] - core.up[bj]);
                total += std::max(0.0, core.lo[bj] - core.value[bj]);
            }
            if (total < best_total_viol - 1e-12) {
                best_total_viol = total;
                since_progress = 0;
            } else if (++since_progress > 60) {
                return DualRepair::GiveUp;
            }
        }
        // Leaving: the most violated basic.
        std::int32_t r = -1;
        double worst = core.opt.feas_tol;
        bool at_upper = false;
        for (std::size_t i = 0; i < mm; ++i) {
            std::int32_t bj = core.basis[i];
            double v = core.value[bj];
            if (v > core.up[bj] + worst) {
                worst = v - core.up[bj];
                r = static_cast<std::int32_t>(i);
                at_upper = true;
            } else if (v < core.lo[bj] - worst) {
                worst = core.lo[bj] - v;
                r = static_cast<std::int32_t>(i);
                at_upper = false;
            }
        }
        if (r < 0) return DualRepair::Feasible;
        core.iterations++;

        std::fill(er.begin(), er.end(), 0.0);
        er[r] = 1.0;
        core.btran(er);
        std::fill(alpha.begin(), alpha.end(), 0.0);
        for (std::size_t i = 0; i < mm; ++i) {
            double yi = er[i];
            if (yi == 0.0) continue;
            const SparseRow& row = core.p->rows[core.active[i]];
            double ys = yi * core.rscale[i];
            for (std::size_t k = 0; k < row.idx.size(); ++k)
                alpha[row.idx[k]] += ys * row.val[k];
        }
        for (std::size_t j = core.n; j < core.cols(); ++j)
            alpha[j] += er[core.unit_row[j - core.n]];

        // Uniform orientation: work as if leaving at the upper bound.
        const double flip = at_upper ? 1.0 : -1.0;
        std::int32_t q = -1;
        double best_ratio = kInf;
        double best_alpha = 0.0;
        for (std::size_t j = 0; j < core.cols(); ++j) {
            if (core.state[j] == VarState::Basic) continue;
            if (core.lo[j] == core.up[j]) continue;
            double a = alpha[j] * flip;
            if (std::abs(a) <= pivot_tol) continue;
            bool eligible = false;
            if (core.state[j] == VarState::AtLower && a > 0.0) eligible = true;
            else if (core.state[j] == VarState::AtUpper && a < 0.0) eligible = true;
            else if (core.state[j] == VarState::FreeZero) eligible = true;
            if (!eligible) continue;
            double ratio = std::abs(d[j]) / std::abs(a);
            if (ratio < best_ratio - 1e-12 ||
                (ratio < best_ratio + 1e-12 &&
                 (q < 0 || std::abs(a) > std::abs(best_alpha) + 1e-15 ||
                  (std::abs(a) >= std::abs(best_alpha) - 1e-15 &&
                   static_cast<std::int32_t>(j) < q)))) {
                best_ratio = ratio;
                q = static_cast<std::int32_t>(j);
                best_alpha = alpha[j];
            }
        }
        if (q < 0) return DualRepair::Infeasible;  // violated row cannot be repaired

        std::int32_t leave = core.basis[r];
        double excess = at_upper ? core.value[leave] - core.up[leave]
                                 : core.value[leave] - core.lo[leave];
        // Entering step solves alpha_q * dx_q = excess.
        double dx_q = excess / alpha[q];

        core.column(q, w);
        core.ftran(w);
        for (std::size_t i = 0; i < mm; ++i) {
            if (w[i] != 0.0) core.value[core.basis[i]] -= dx_q * w[i];
        }
        core.value[q] += dx_q;
        core.value[leave] = at_upper ? core.up[leave] : core.lo[leave];
        core.state[leave] = at_upper ? VarState::AtUpper : VarState::AtLower;
        core.state[q] = VarState::Basic;
        core.basis[r] = q;

        // Dual update keeps the reduced costs consistent.
        double theta = d[q] / alpha[q];
        if (theta != 0.0) {
            for (std::size_t j = 0; j < core.cols(); ++j) {
                if (core.state[j] == VarState::Basic) continue;
                if (alpha[j] != 0.0) d[j] -= theta * alpha[j];
            }
        }
        d[leave] = -theta;
        d[q] = 0.0;

        LpCore::Eta e;
        e.r = r;
        e.w = w;
        core.etas.push_back(std::move(e));
        if (++core.pivots_since_refactor >= 64) {
            if (!core.refactor()) return DualRepair::GiveUp;
            core.recompute_basics();
        }
    }
    return DualRepair::GiveUp;
}

// Builds slack (and artificial) columns for newly activated rows and returns
// false if phase 1 is needed.
void append_rows(LpCore& core, const std::vector<std::int32_t>& new_rows) {
    for (std::int32_t ri : new_rows) {
        const SparseRow& row = core.p->rows[ri];
        double scale = 0.0;
        for (double v : row.val) scale = std::max(scale, std::abs(v));
        scale = (scale > 0.0) ? 1.0 / scale : 1.0;
        std::int32_t pos = static_cast<std::int32_t>(core.active.size());
        core.active.push_back(ri);
        core.rowpos[ri] = pos;
        core.rscale.push_back(scale);
        core.rhs.push_back(row.rhs * scale);

        double ls = 0.0, us = 0.0;
        switch (row.sense) {
            case RowSense::LE: ls = 0.0; us = kInf; break;
            case RowSense::GE: ls = -kInf; us = 0.0; break;
            case RowSense::EQ: ls = 0.0; us = 0.0; break;
        }
        core.lo.push_back(ls);
        core.up.push_back(us);
        core.c2.push_back(0.0);
        core.c1.push_back(0.0);
        core.unit_row.push_back(pos);
        core.is_art.push_back(false);
        core.state.push_back(VarState::Basic);
        core.value.push_back(0.0);
        core.basis.push_back(static_cast<std::int32_t>(core.cols()) - 1);
        core.slack_col.push_back(core.basis.back());
    }
}

// Ensures all basic values are within bounds by installing artificials and
// running phase 1. Returns false on infeasibility.
bool ensure_feasible(LpCore& core) {
    if (!core.refactor()) {
        core.reset_to_slack_basis();
        core.refactor();
    }
    core.recompute_basics();

    const std::size_t mm = core.m();
    std::fill(core.c1.begin(), core.c1.end(), 0.0);
    bool any_art = false;

    // Ejecting an out-of-bound basic shifts every other basic value, so new
    // violations can appear; repeat until only artificials carry violations.
    bool restarted = false;
    for (std::size_t pass = 0; pass <= 2 * mm + 4; ++pass) {
        // Rows already covered by a basic unit column; installing a second
        // unit column for such a row would make the basis singular.
        std::vector<bool> unit_covered(mm, false);
        for (std::size_t i = 0; i < mm; ++i) {
            std::int32_t bj = core.basis[i];
            if (core.is_unit_col(bj)) unit_covered[core.unit_row[bj - core.n]] = true;
        }
        // Re-anchor artificial bounds and costs to their current values.
        core.c1.assign(core.cols(), 0.0);
        for (std::size_t j = core.n; j < core.cols(); ++j) {
            if (!core.is_art[j - core.n]) continue;
            if (core.state[j] == VarState::Basic) {
                double v = core.value[j];
                core.lo[j] = std::min(0.0, v);
                core.up[j] = std::max(0.0, v);
                core.c1[j] = (v > 0.0) ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
                if (core.c1[j] != 0.0) any_art = true;
            } else {
                core.lo[j] = 0.0;
                core.up[j] = 0.0;
                core.value[j] = 0.0;
            }
        }
        bool changed = false;
        bool conflict = false;
        for (std::size_t i = 0; i < mm; ++i) {
            std::int32_t bj = core.basis[i];
            if (core.is_unit_col(bj) && core.is_art[bj - core.n]) continue;
            double v = core.value[bj];
            double viol = std::max(core.lo[bj] - v, v - core.up[bj]);
            if (viol <= core.opt.feas_tol) continue;
            bool self_unit = core.is_unit_col(bj) && core.unit_row[bj - core.n] ==
                                                         static_cast<std::int32_t>(i);
            if (unit_covered[i] && !self_unit) {
                conflict = true;
                continue;
            }
            unit_covered[i] = true;
            double nb = (v < core.lo[bj]) ? core.lo[bj] : core.up[bj];
            core.state[bj] = (nb == core.lo[bj]) ? VarState::AtLower : VarState::AtUpper;
            core.value[bj] = nb;
            core.lo.push_back(0.0);  // re-anchored above on the next pass
            core.up.push_back(0.0);
            core.c2.push_back(0.0);
            core.c1.push_back(0.0);
            core.unit_row.push_back(static_cast<std::int32_t>(i));
            core.is_art.push_back(true);
            core.state.push_back(VarState::Basic);
            core.value.push_back(0.0);
            core.basis[i] = static_cast<std::int32_t>(core.cols()) - 1;
            changed = true;
            any_art = true;
        }
        if (conflict && !changed) {
            // Cannot repair in place; restart from the slack basis, where
            // every row is covered exactly once by its own slack.
            if (restarted) return false;
            restarted = true;
            core.reset_to_slack_basis();
            core.refactor();
            core.recompute_basics();
            continue;
        }
        if (!changed) break;
        if (!core.refactor()) {
            if (restarted) return false;
            restarted = true;
            core.reset_to_slack_basis();
            core.refactor();
        }
        core.recompute_basics();
    }
    if (!any_art) return true;

    long it0 = core.iterations;
    SimplexResult r = run_simplex(core, core.c1, /*phase1=*/true);
    if (core.opt.log)
        std::fprintf(stderr, "[lp] phase1: %ld iters, %zu cols\n", core.iterations - it0,
                     core.cols());
    if (r.kind != SimplexResult::Optimal) return false;
    double infeas = core.phase_objective(core.c1);
    if (infeas > 1e-7) return false;
    // Freeze artificials at zero for phase 2.
    for (std::size_t j = core.n; j < core.cols(); ++j) {
        if (!core.is_art[j - core.n]) continue;
        core.lo[j] = 0.0;
        core.up[j] = 0.0;
        if (core.state[j] != VarState::Basic) {
            core.state[j] = VarState::AtLower;
            core.value[j] = 0.0;
        }
    }
    core.refactor();
    core.recompute_basics();
    return true;
}

}  // namespace

MilpSolution solve_lp(const MilpProblem& p, const SolverOptions& opt,
                      const LpWarmStart* hint, LpWarmStart* out) {
    p.validate();
    const std::int32_t n = p.num_vars();

    LpCore core;
    core.p = &p;
    core.opt = opt;
    core.n = n;
    core.rowpos.assign(p.rows.size(), -1);
    core.csc.resize(n);
    for (std::size_t ri = 0; ri < p.rows.size(); ++ri)
        for (std::size_t k = 0; k < p.rows[ri].idx.size(); ++k)
            core.csc[p.rows[ri].idx[k]].push_back(
                {static_cast<std::int32_t>(ri), p.rows[ri].val[k]});

    const bool warm =
        hint && hint->valid && hint->var_state.size() == static_cast<std::size_t>(n);

    // Structural columns start at the bound nearest zero (or the hinted side).
    for (std::int32_t j = 0; j < n; ++j) {
        core.lo.push_back(p.lower[j]);
        core.up.push_back(p.upper[j]);
        core.c2.push_back(p.objective[j]);
        core.c1.push_back(0.0);
        double v;
        VarState st;
        if (p.lower[j] == -kInf && p.upper[j] == kInf) {
            v = 0.0;
            st = VarState::FreeZero;
        } else if (p.lower[j] == -kInf) {
            v = p.upper[j];
            st = VarState::AtUpper;
        } else if (p.upper[j] == kInf) {
            v = p.lower[j];
            st = VarState::AtLower;
        } else {
            v = (std::abs(p.lower[j]) <= std::abs(p.upper[j])) ? p.lower[j] : p.upper[j];
            st = (v == p.lower[j]) ? VarState::AtLower : VarState::AtUpper;
        }
        if (warm) {
            VarState hs = static_cast<VarState>(hint->var_state[j]);
            if (hs == VarState::AtLower && p.lower[j] != -kInf) {
                st = hs;
                v = p.lower[j];
            } else if (hs == VarState::AtUpper && p.upper[j] != kInf) {
                st = hs;
                v = p.upper[j];
            } else if (hs == VarState::FreeZero && p.lower[j] == -kInf &&
                       p.upper[j] == kInf) {
                st = hs;
                v = 0.0;
            }
            // A hinted-basic variable keeps the cold nonbasic placement and is
            // promoted when the basis installs below.
        }
        core.value.push_back(v);
        core.state.push_back(st);
    }

    std::vector<std::int32_t> eager;
    std::vector<bool> take(p.rows.size(), false);
    for (std::size_t ri = 0; ri < p.rows.size(); ++ri)
        if (!p.rows[ri].lazy) take[ri] = true;
    if (warm)
        for (std::int32_t ri : hint->active_rows)
            if (ri >= 0 && ri < static_cast<std::int32_t>(p.rows.size())) take[ri] = true;
    for (std::size_t ri = 0; ri < p.rows.size(); ++ri)
        if (take[ri]) eager.push_back(static_cast<std::int32_t>(ri));
    append_rows(core, eager);

    // Install the hinted basis when it maps cleanly onto the active rows.
    if (warm && hint->basis.size() == core.m()) {
        bool ok = true;
        std::vector<std::int32_t> wanted(core.m(), -1);
        std::vector<bool> used_struct(n, false);
        for (std::size_t i = 0; i < core.m() && ok; ++i) {
            std::int64_t b = hint->basis[i];
            if (b >= 0) {
                if (b >= n || used_struct[b]) ok = false;
                else {
                    used_struct[b] = true;
                    wanted[i] = static_cast<std::int32_t>(b);
                }
            } else {
                std::int64_t row = ~b;
                if (row < 0 || row >= static_cast<std::int64_t>(p.rows.size()) ||
                    core.rowpos[row] < 0)
                    ok = false;
                else
                    wanted[i] = core.n + core.rowpos[row];
            }
        }
        if (opt.log && !ok) std::fprintf(stderr, "[lp] warm basis rejected\n");
        if (ok) {
            for (std::size_t i = 0; i < core.m(); ++i) {
                // Mark the previous slack holder nonbasic at a feasible bound.
                std::int32_t old = core.basis[i];
                core.state[old] = (core.lo[old] == -kInf && core.up[old] == kInf)
                                      ? VarState::FreeZero
                                      : (core.lo[old] != -kInf ? VarState::AtLower
                                                               : VarState::AtUpper);
                core.value[old] = (core.state[old] == VarState::AtLower)
                                      ? core.lo[old]
                                      : (core.state[old] == VarState::AtUpper ? core.up[old]
                                                                              : 0.0);
            }
            for (std::size_t i = 0; i < core.m(); ++i) {
                core.basis[i] = wanted[i];
                core.state[wanted[i]] = VarState::Basic;
            }
        }
    }

    MilpSolution sol;
    const double big_viol = 1e-9;

    // A hinted basis (or our own optimum from the previous lazy round) is dual
    // feasible for the phase-2 costs, so bound changes and appended rows can
    // be repaired by the dual simplex instead of a fresh phase 1.
    bool dual_ok = warm;

    for (int round = 0;; ++round) {
        if (round > 200) {
            sol.status = SolveStatus::NumericalFailure;
            return sol;
        }
        bool feasible_now = false;
        if (dual_ok) {
            if (!core.refactor()) {
                core.reset_to_slack_basis();
                core.refactor();
                dual_ok = false;
            } else {
                core.recompute_basics();
                switch (dual_repair(core)) {
                    case DualRepair::Feasible: feasible_now = true; break;
                    case DualRepair::Infeasible:
                        sol.status = SolveStatus::Infeasible;
                        sol.simplex_iterations = core.iterations;
                        return sol;
                    case DualRepair::GiveUp: dual_ok = false; break;
                }
            }
        }
        if (!feasible_now && !ensure_feasible(core)) {
            sol.status = SolveStatus::Infeasible;
            sol.simplex_iterations = core.iterations;
            return sol;
        }
        SimplexResult r = run_simplex(core, core.c2, /*phase1=*/false);
        dual_ok = (r.kind == SimplexResult::Optimal);
        if (opt.log)
            std::fprintf(stderr, "[lp] round %d: %s, %zu active rows, %ld iters total\n",
                         round, r.kind == SimplexResult::Optimal ? "optimal"
                         : r.kind == SimplexResult::Unbounded    ? "unbounded"
                                                                 : "limit",
                         core.m(), core.iterations);
        if (r.kind == SimplexResult::IterLimit || r.kind == SimplexResult::Numerical) {
            sol.status = SolveStatus::NumericalFailure;
            sol.simplex_iterations = core.iterations;
            return sol;
        }
        if (r.kind == SimplexResult::Unbounded) {
            // A genuine ray must satisfy every active row and bound
            // directionally and improve the objective; anything else is
            // numerical trouble, not unboundedness.
            {
                double cd = 0.0;
                bool sane = true;
                for (std::int32_t j = 0; j < n; ++j) {
                    cd += p.objective[j] * r.ray[j];
                    if (r.ray[j] > 1e-9 && p.upper[j] != kInf) sane = false;
                    if (r.ray[j] < -1e-9 && p.lower[j] != -kInf) sane = false;
                }
                if (cd >= -1e-9) sane = false;
                for (std::size_t ri = 0; sane && ri < p.rows.size(); ++ri) {
                    if (core.rowpos[ri] < 0) continue;
                    const SparseRow& row = p.rows[ri];
                    double ad = 0.0;
                    double scale = 1.0;
                    for (std::size_t k = 0; k < row.idx.size(); ++k) {
                        ad += row.val[k] * r.ray[row.idx[k]];
                        scale = std::max(scale, std::abs(row.val[k]));
                    }
                    ad /= scale;
                    if (row.sense == RowSense::LE && ad > 1e-7) sane = false;
                    if (row.sense == RowSense::GE && ad < -1e-7) sane = false;
                    if (row.sense == RowSense::EQ && std::abs(ad) > 1e-7) sane = false;
                }
                if (!sane) {
                    sol.status = SolveStatus::NumericalFailure;
                    sol.simplex_iterations = core.iterations;
                    return sol;
                }
            }
            // Try to cut the ray with inactive lazy rows.
            std::vector<std::int32_t> cut;
            for (std::size_t ri = 0; ri < p.rows.size(); ++ri) {
                if (core.rowpos[ri] >= 0 || !p.rows[ri].lazy) continue;
                const SparseRow& row = p.rows[ri];
                double ad = 0.0;
                for (std::size_t k = 0; k < row.idx.size(); ++k)
                    ad += row.val[k] * r.ray[row.idx[k]];
                bool cuts = false;
                switch (row.sense) {
                    case RowSense::LE: cuts = ad > big_viol; break;
                    case RowSense::GE: cuts = ad < -big_viol; break;
                    case RowSense::EQ: cuts = std::abs(ad) > big_viol; break;
                }
                if (cuts) cut.push_back(static_cast<std::int32_t>(ri));
            }
            if (cut.empty()) {
                sol.status = SolveStatus::Unbounded;
                sol.simplex_iterations = core.iterations;
                return sol;
            }
            append_rows(core, cut);
            continue;
        }

        // Optimal on the active set; re-check the lazy pool.
        core.refactor();
        core.recompute_basics();
        std::vector<double> x(n);
        for (std::int32_t j = 0; j < n; ++j) x[j] = core.value[j];
        std::vector<std::pair<double, std::int32_t>> violated;
        for (std::size_t ri = 0; ri < p.rows.size(); ++ri) {
            if (core.rowpos[ri] >= 0 || !p.rows[ri].lazy) continue;
            const SparseRow& row = p.rows[ri];
            double a = 0.0;
            double scale = 1.0;
            for (std::size_t k = 0; k < row.idx.size(); ++k) {
                a += row.val[k] * x[row.idx[k]];
                scale = std::max(scale, std::abs(row.val[k]));
            }
            double viol = 0.0;
            switch (row.sense) {
                case RowSense::LE: viol = a - row.rhs; break;
                case RowSense::GE: viol = row.rhs - a; break;
                case RowSense::EQ: viol = std::abs(a - row.rhs); break;
            }
            if (viol > opt.feas_tol)
                violated.push_back({-viol / scale, static_cast<std::int32_t>(ri)});
        }
        if (!violated.empty()) {
            // Activate only the most violated rows each round to keep the
            // working basis small; ties resolve by row index for determinism.
            std::sort(violated.begin(), violated.end());
            const std::size_t batch = 200;
            std::vector<std::int32_t> add;
            for (std::size_t k = 0; k < std::min(batch, violated.size()); ++k)
                add.push_back(violated[k].second);
            std::sort(add.begin(), add.end());
            append_rows(core, add);
            continue;
        }

        if (out) {
            out->valid = true;
            out->var_state.resize(n);
            for (std::int32_t j = 0; j < n; ++j)
                out->var_state[j] = static_cast<std::uint8_t>(core.state[j]);
            out->basis.clear();
            out->active_rows.clear();

            for (std::size_t i = 0; i < core.m(); ++i)
                if (p.rows[core.active[i]].lazy) out->active_rows.push_back(core.active[i]);
            for (std::size_t i = 0; i < core.m() && out->valid; ++i) {
                std::int32_t bj = core.basis[i];
                if (bj < n) {
                    out->basis.push_back(bj);
                    continue;
                }
                std::int32_t k = bj - core.n;
                if (!core.is_art[k]) {
                    out->basis.push_back(~static_cast<std::int64_t>(core.active[core.unit_row[k]]));
                } else {
                    // A frozen artificial may linger in the basis at zero;
                    // substitute the row's own slack when that slack is free.
                    std::int32_t pos = core.unit_row[k];
                    std::int32_t sc = core.slack_col[pos];
                    if (core.state[sc] != VarState::Basic)
                        out->basis.push_back(~static_cast<std::int64_t>(core.active[pos]));
                    else
                        out->valid = false;
                }
            }
        }
        sol.x = std::move(x);
        sol.objective = 0.0;
        for (std::int32_t j = 0; j < n; ++j) sol.objective += p.objective[j] * sol.x[j];
        sol.best_bound = sol.objective;
        sol.gap = 0.0;
        sol.simplex_iterations = core.iterations;
        sol.max_violation = p.max_violation(sol.x);
        if (sol.max_violation > 1e-6) {
            sol.status = SolveStatus::NumericalFailure;
            return sol;
        }
        sol.status = SolveStatus::Optimal;
        return sol;
    }
}

}  // namespace dynramp
