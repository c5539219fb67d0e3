#ifndef DYNRAMP_SCHEDULER_HPP
#define DYNRAMP_SCHEDULER_HPP

#include <optional>
#include <string>
#include <vector>

#include "dynramp/collocation.hpp"
#include "dynramp/csv.hpp"
#include "dynramp/limitfit.hpp"
#include "dynramp/lp.hpp"

namespace dynramp {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class InfeasibleSchedule : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Energy conversion component with an affine conversion curve
// Q_out = conv_m * Q_in + conv_b * z_on and a minimum part load.
struct Component {
    std::string name;
    std::string consumes;  // purchased fuel form, priced by the fuel column
    std::string supplies;  // primary output energy form
    double conv_m = 1.0;
    double conv_b = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
    double power_to_heat = 0.0;  // electricity output per unit primary output
};

struct EnergySystemConfig {
    std::string name;
    std::vector<std::string> forms;  // must contain the balanced energy forms
    std::vector<Component> components;
    double grid_buy_limit = 0.0;
    double grid_sell_limit = 0.0;

    void validate() const;
    static EnergySystemConfig from_kv(const KvTree& t);
    static EnergySystemConfig load_file(const std::string& path);
    KvTree to_kv() const;
};

struct PriceSeries {
    std::vector<double> buy;   // electricity purchase price per hour
    std::vector<double> sell;  // electricity feed-in price per hour
    std::vector<double> fuel;  // fuel price per hour

    static PriceSeries load_csv(const std::string& path);
};

struct DemandSeries {
    std::vector<double> heat;
    std::vector<double> electricity;

    static DemandSeries load_csv(const std::string& path);
};

// Scheduling-level description of one flexible process.
struct ProcessFlexConfig {
    std::string name;
    AffineLimitSet limits;
    DemandSurrogate surrogate;
    std::string supplies = "heat";  // energy form credited by the surrogate
    double demand_scale = 1.0;      // dimensionless demand -> system units
    double storage_capacity_h = 3.0;
    double storage_initial_frac = 0.5;
    bool pin_terminal_storage = true;
    bool pin_terminal_phi = false;
    std::optional<double> src_lo;  // static constants; default from limits
    std::optional<double> src_hi;

    void validate() const;
    static ProcessFlexConfig load_file(const std::string& path);
    KvTree to_kv() const;
};

enum class RampingMode { Dynamic, Static, Steady };

struct BuildOptions {
    RampingMode mode = RampingMode::Dynamic;
    int elements_per_hour = 2;
    int collocation_points = 4;
};

// Built problem plus the metadata needed to reconstruct trajectories.
struct ScheduleProblem {
    MilpProblem milp;
    BuildOptions options;
    int horizon = 0;
    EnergySystemConfig system;
    std::vector<ProcessFlexConfig> processes;
    PriceSeries prices;
    DemandSeries demands;

    // Variable indices.
    std::vector<std::vector<std::int32_t>> nu;        // [process][hour]
    std::vector<std::vector<std::int32_t>> q_in;      // [component][hour]
    std::vector<std::vector<std::int32_t>> q_out;     // [component][hour]
    std::vector<std::vector<std::int32_t>> z_on;      // [component][hour]
    std::vector<std::int32_t> grid_buy;               // [hour]
    std::vector<std::int32_t> grid_sell;              // [hour]
    std::vector<std::int32_t> phi_cost;               // cumulative cost, [hour]

    CollocationScheme scheme;
    std::vector<double> node_offsets;  // within-hour node times (E*K entries)
};

ScheduleProblem build_p2(const EnergySystemConfig& system,
                         const std::vector<ProcessFlexConfig>& processes,
                         const PriceSeries& prices, const DemandSeries& demands,
                         int horizon_hours, const BuildOptions& options = {});

// Static ramping variant: constant bounds on nu for processes that provide
// SRC constants (defaults to the extremal fitted limits); processes of order
// delta >= 2 keep their dynamic rows since first-order static ramping does
// not apply to them.
ScheduleProblem build_p2_src(const EnergySystemConfig& system,
                             const std::vector<ProcessFlexConfig>& processes,
                             const PriceSeries& prices, const DemandSeries& demands,
                             int horizon_hours, const BuildOptions& options = {});

// Steady baseline: nu pinned to zero, production stays at the nominal rate.
ScheduleProblem build_steady_baseline(const EnergySystemConfig& system,
                                      const std::vector<ProcessFlexConfig>& processes,
                                      const PriceSeries& prices, const DemandSeries& demands,
                                      int horizon_hours, const BuildOptions& options = {});

struct FastRampResult {
    bool reachable = false;
    double time_hours = 0.0;
    double step_hours = 0.01;
    std::vector<double> nu_per_step;
    std::vector<double> time_grid;                 // step boundaries
    std::vector<std::vector<double>> phi_at_grid;  // [m][boundary]
};

// Minimal time to move phi from (rho_from, 0, ...) to settle at
// (rho_to, 0, ...), by bisection on the horizon over LP feasibility with
// piecewise-constant nu per step.
FastRampResult build_fastest_ramp(const AffineLimitSet& limits, double rho_from, double rho_to,
                                  double step_hours = 0.01, bool use_static_constants = false,
                                  std::optional<double> src_lo = std::nullopt,
                                  std::optional<double> src_hi = std::nullopt);

struct Schedule {
    int horizon = 0;
    double objective = 0.0;
    double solver_gap = 0.0;
    long solver_nodes = 0;

    // Hourly data.
    std::vector<std::vector<double>> nu;        // [process][hour]
    std::vector<std::vector<double>> e_wh;      // scheduled supply energy per hour
    std::vector<std::vector<double>> q_in;      // [component][hour]
    std::vector<std::vector<double>> q_out;
    std::vector<std::vector<double>> z_on;      // exactly 0/1
    std::vector<double> grid_buy;
    std::vector<double> grid_sell;
    std::vector<double> hourly_cost;
    std::vector<double> cumulative_cost;

    // Node-resolution trajectories.
    std::vector<double> node_times;
    std::vector<std::vector<std::vector<double>>> phi_nodes;  // [p][m][node]
    std::vector<std::vector<double>> storage_nodes;           // [p][node]

    void save_csv(const std::string& dir, const EnergySystemConfig& system,
                  const std::vector<ProcessFlexConfig>& processes) const;
};

// Re-derives trajectories from the solved MILP and re-verifies every balance
// row to 1e-8; throws LpError on stale problem/solution pairing.
Schedule extract_schedule(const ScheduleProblem& sp, const MilpSolution& sol);

}  // namespace dynramp

#endif
