#include <algorithm>
#include <cmath>
#include <queue>

#include "dynramp/lp.hpp"

namespace dynramp {

namespace {

struct Node {
    double bound;  // LP objective of the parent (lower bound for children)
    long id;       // creation order; ties resolve to the older node
    std::vector<double> lower;
    std::vector<double> upper;
    LpWarmStart warm;  // parent basis; speeds up the child LP re-solve
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
        return a.id > b.id;
    }
};

// Most fractional binary; ties go to the lowest index.
std::int32_t pick_branch(const MilpProblem& p, const std::vector<double>& x, double int_tol) {
    std::int32_t best = -1;
    double best_frac = int_tol;
    for (std::int32_t b : p.binaries) {
        double f = x[b] - std::floor(x[b]);
        double dist = std::min(f, 1.0 - f);
        if (dist > best_frac + 1e-15) {
            best_frac = dist;
            best = b;
        }
    }
    return best;
}

double relative_gap(double incumbent, double bound) {
    if (incumbent == kInf) return kInf;
    double denom = std::max(1e-10, std::abs(incumbent));
    return std::max(0.0, (incumbent - bound) / denom);
}

void snap_binaries(const MilpProblem& p, std::vector<double>& x, double int_tol) {
    for (std::int32_t b : p.binaries) {
        double r = std::round(x[b]);
        if (std::abs(x[b] - r) <= 10 * int_tol) x[b] = r;
    }
}

}  // namespace

MilpSolution solve_milp(const MilpProblem& p, const SolverOptions& opt) {
    p.validate();
    if (p.binaries.empty()) return solve_lp(p, opt);

    MilpSolution best;
    best.status = SolveStatus::Infeasible;
    double incumbent = kInf;
    std::vector<double> incumbent_x;
    long nodes = 0;
    long total_iters = 0;
    long next_id = 0;
    bool hit_node_limit = false;

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    open.push(Node{-kInf, next_id++, p.lower, p.upper, {}});

    double global_bound = -kInf;

    MilpProblem work = p;
    while (!open.empty()) {
        Node node = open.top();

        // Bound from the open set; the top node carries the least bound.
        global_bound = node.bound;
        if (incumbent < kInf) {
            double gap = relative_gap(incumbent, global_bound);
            if (gap <= opt.gap_tol + 1e-15) break;
        }
        open.pop();

        if (incumbent < kInf &&
            node.bound >= incumbent - 1e-9 * std::max(1.0, std::abs(incumbent)))
            continue;  // cannot improve

        // Depth-first dive from this node, queueing the "away" children.
        std::vector<double> lo = std::move(node.lower);
        std::vector<double> up = std::move(node.upper);
        LpWarmStart warm = std::move(node.warm);
        for (;;) {
            if (nodes >= opt.node_limit) {
                hit_node_limit = true;
                break;
            }
            ++nodes;
            work.lower = lo;
            work.upper = up;
            LpWarmStart next_warm;
            MilpSolution rel = solve_lp(work, opt, warm.valid ? &warm : nullptr, &next_warm);
            if ((rel.status == SolveStatus::NumericalFailure ||
                 rel.status == SolveStatus::Unbounded) &&
                warm.valid) {
                // The warm basis can go stale numerically; retry from scratch.
                next_warm = LpWarmStart{};
                rel = solve_lp(work, opt, nullptr, &next_warm);
            }
            warm = std::move(next_warm);
            total_iters += rel.simplex_iterations;
            if (rel.status == SolveStatus::NumericalFailure) {
                best.status = SolveStatus::NumericalFailure;
                best.node_count = nodes;
                best.simplex_iterations = total_iters;
                return best;
            }
            if (rel.status == SolveStatus::Infeasible) break;
            if (rel.status == SolveStatus::Unbounded) {
                // Unbounded relaxation at the root means an unbounded MILP
                // once any integral point exists; report unbounded.
                best.status = SolveStatus::Unbounded;
                best.node_count = nodes;
                best.simplex_iterations = total_iters;
                return best;
            }
            if (incumbent < kInf &&
                rel.objective >= incumbent - 1e-9 * std::max(1.0, std::abs(incumbent)))
                break;  // dominated

            std::int32_t branch = pick_branch(p, rel.x, opt.int_tol);
            if (branch < 0) {
                // Integral: candidate incumbent.
                std::vector<double> cand = rel.x;
                snap_binaries(p, cand, opt.int_tol);
                if (p.max_violation(cand) <= 10 * opt.feas_tol) {
                    double obj = 0.0;
                    for (std::int32_t j = 0; j < p.num_vars(); ++j)
                        obj += p.objective[j] * cand[j];
                    if (obj < incumbent) {
                        incumbent = obj;
                        incumbent_x = cand;
                    }
                }
                break;
            }

            // Children: dive toward the nearer integer, queue the other side.
            double frac = rel.x[branch];
            int near = (frac - std::floor(frac) <= 0.5) ? 0 : 1;
            Node away;
            away.bound = rel.objective;
            away.id = next_id++;
            away.lower = lo;
            away.upper = up;
            away.warm = warm;
            if (near == 0) {
                away.lower[branch] = 1.0;  // away child: x_b = 1
                up[branch] = 0.0;          // dive child: x_b = 0
            } else {
                away.upper[branch] = 0.0;
                lo[branch] = 1.0;
            }
            open.push(std::move(away));
        }
        if (hit_node_limit) break;
    }

    if (open.empty()) global_bound = incumbent;

    best.node_count = nodes;
    best.simplex_iterations = total_iters;
    if (incumbent == kInf) {
        best.status = hit_node_limit ? SolveStatus::NodeLimit : SolveStatus::Infeasible;
        return best;
    }
    best.x = incumbent_x;
    best.objective = incumbent;
    best.best_bound = std::min(global_bound, incumbent);
    best.gap = relative_gap(incumbent, best.best_bound);
    best.max_violation = p.max_violation(best.x);
    best.max_integrality_violation = 0.0;
    for (std::int32_t b : p.binaries)
        best.max_integrality_violation = std::max(
            best.max_integrality_violation, std::abs(best.x[b] - std::round(best.x[b])));
    if (hit_node_limit) best.status = SolveStatus::NodeLimit;
    else if (best.gap > 1e-15 && opt.gap_tol > 0.0) best.status = SolveStatus::GapLimit;
    else best.status = SolveStatus::Optimal;
    return best;
}

MilpSolution brute_force(const MilpProblem& p, const SolverOptions& opt) {
    p.validate();
    const std::size_t nb = p.binaries.size();
    if (nb > 20) throw LpError("brute_force supports at most 20 binaries");
    MilpProblem work = p;
    MilpSolution best;
    best.status = SolveStatus::Infeasible;
    double best_obj = kInf;
    long lp_count = 0;
    for (std::size_t mask = 0; mask < (std::size_t(1) << nb); ++mask) {
        for (std::size_t j = 0; j < nb; ++j) {
            double v = (mask >> j) & 1 ? 1.0 : 0.0;
            work.lower[p.binaries[j]] = v;
            work.upper[p.binaries[j]] = v;
        }
        MilpSolution rel = solve_lp(work, opt);
        ++lp_count;
        best.simplex_iterations += rel.simplex_iterations;
        if (rel.status != SolveStatus::Optimal) continue;
        if (rel.objective < best_obj) {
            best_obj = rel.objective;
            best.x = rel.x;
        }
    }
    best.node_count = lp_count;
    if (best_obj < kInf) {
        best.status = SolveStatus::Optimal;
        best.objective = best_obj;
        best.best_bound = best_obj;
        best.gap = 0.0;
        best.max_violation = p.max_violation(best.x);
    }
    return best;
}

}  // namespace dynramp
