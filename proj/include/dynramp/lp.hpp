#ifndef DYNRAMP_LP_HPP
#define DYNRAMP_LP_HPP

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynramp {

class LpError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense : std::uint8_t { LE, EQ, GE };

struct SparseRow {
    std::vector<std::int32_t> idx;
    std::vector<double> val;
    RowSense sense = RowSense::LE;
    double rhs = 0.0;
    std::string name;
    // Lazy rows participate in the model but are activated by the solver only
    // when violated; used for the dense blocks of node-wise bound rows.
    bool lazy = false;
};

// Sparse minimization MILP: min c'x s.t. rows, l <= x <= u, x_b binary.
struct MilpProblem {
    std::string name;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> objective;
    std::vector<std::string> var_names;
    std::vector<SparseRow> rows;
    std::vector<std::int32_t> binaries;  // kept sorted and unique

    std::int32_t num_vars() const { return static_cast<std::int32_t>(lower.size()); }

    std::int32_t add_var(const std::string& name, double lo, double hi, double obj);
    void add_binary(std::int32_t var);
    SparseRow& add_row(RowSense sense, double rhs, const std::string& name, bool lazy = false);

    void validate() const;

    // Worst violation of all rows (and bounds) at the given point.
    double max_violation(const std::vector<double>& x) const;
};

enum class SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    GapLimit,
    NodeLimit,
    NumericalFailure,
};

std::string to_string(SolveStatus s);

struct MilpSolution {
    SolveStatus status = SolveStatus::NumericalFailure;
    std::vector<double> x;
    double objective = 0.0;
    double best_bound = -kInf;
    double gap = kInf;           // relative MIP gap
    long node_count = 0;         // processed branch-and-bound nodes
    long simplex_iterations = 0;
    double max_violation = 0.0;
    double max_integrality_violation = 0.0;

    bool feasible() const {
        return status == SolveStatus::Optimal || status == SolveStatus::GapLimit ||
               status == SolveStatus::NodeLimit;
    }
};

struct SolverOptions {
    double feas_tol = 1e-8;
    double int_tol = 1e-9;
    double gap_tol = 0.0;        // relative; 0 means prove optimality
    long node_limit = 2'000'000;
    long iteration_limit = 2'000'000;
    bool log = false;
};

// Opaque restart data: final variable states, basis, and activated lazy rows
// of a previous solve on the same problem structure (bounds may differ).
struct LpWarmStart {
    bool valid = false;
    std::vector<std::uint8_t> var_state;       // structural variables
    std::vector<std::int64_t> basis;           // >=0: structural var, <0: ~row index slack
    std::vector<std::int32_t> active_rows;
};

// Bounded-variable primal simplex (phase 1 with artificials, Dantzig pricing
// with a Bland fallback after stalls, product-form updates with periodic
// refactorization). Binaries are treated as continuous in [0,1]-type bounds.
MilpSolution solve_lp(const MilpProblem& p, const SolverOptions& opt = {},
                      const LpWarmStart* hint = nullptr, LpWarmStart* out = nullptr);

// Best-bound branch and bound over the binaries, branching on the most
// fractional one (ties: lowest index), diving depth-first for incumbents.
MilpSolution solve_milp(const MilpProblem& p, const SolverOptions& opt = {});

// Exhaustive enumeration over all binary assignments (<= 20 binaries);
// reference semantics for solve_milp.
MilpSolution brute_force(const MilpProblem& p, const SolverOptions& opt = {});

// Documented text dump/load with bit-exact numeric round trip.
std::string dump_lp(const MilpProblem& p);
MilpProblem parse_lp(const std::string& text);
void save_lp_file(const MilpProblem& p, const std::string& path);
MilpProblem load_lp_file(const std::string& path);

}  // namespace dynramp

#endif
