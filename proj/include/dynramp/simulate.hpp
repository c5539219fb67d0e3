#ifndef DYNRAMP_SIMULATE_HPP
#define DYNRAMP_SIMULATE_HPP

#include <string>
#include <vector>

#include "dynramp/linearize.hpp"
#include "dynramp/scheduler.hpp"

namespace dynramp {

class SimulationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Piecewise description of the scheduled ramping trajectory: nu constant on
// uniform steps (one hour by default) plus the phi value at the start; the
// exact per-step polynomials follow from the integrator chain.
struct RampSchedule {
    int delta = 0;
    double rho_nom = 1.0;
    double step_hours = 1.0;
    std::vector<double> nu_per_hour;   // one value per step
    std::vector<double> phi0;          // at t = 0; defaults to (rho_nom, 0, ...)

    double hours() const { return step_hours * static_cast<double>(nu_per_hour.size()); }
    // phi(t) and nu(t) from the exact per-step polynomials.
    void phi_at(double t, std::vector<double>& phi, double* nu) const;
};

struct ClipEvent {
    double time = 0.0;
    double u_raw = 0.0;
    double u_clipped = 0.0;
};

struct SimResult {
    std::vector<double> time;
    std::vector<std::vector<double>> states;  // [state][step]
    std::vector<double> u;
    std::vector<double> rho;
    std::vector<double> output;       // y(t)
    std::vector<double> demand;       // instantaneous dimensionless waste heat
    std::vector<ClipEvent> clips;
    double max_output_deviation = 0.0;
    double y_nom = 0.0;

    // Hourly integrals of the demand series (trapezoidal on the fine grid).
    std::vector<double> hourly_demand_energy() const;

    void save_csv(const std::string& path, const std::vector<std::string>& state_names) const;
};

// Classic RK4 on the nonlinear model with the exact feedforward input. The
// input is recomputed at every stage from the scheduled (phi, nu); values
// outside [u_min, u_max] are clipped and logged.
SimResult simulate(const ProcessModel& model, const RampingDerivation& d,
                   const RampSchedule& schedule, double dt_hours);

struct ReconcileReport {
    std::vector<double> scheduled_supply;   // per hour, system units
    std::vector<double> realized_supply;    // per hour, system units
    std::vector<double> boiler_adjustment;  // applied output change per hour
    std::vector<double> unmet_heat;         // residual after absorption
    std::vector<double> grid_adjustment;    // electricity rebalancing per hour
    double scheduled_cost = 0.0;
    double realized_cost = 0.0;

    std::string summary() const;
};

// Recomputes the hourly waste heat from a simulation per process and absorbs
// the mismatch with the scheduled absorber component (a boiler-like unit kept
// at its scheduled on/off state), then the grid for electricity. Residuals
// are reported, never hidden.
ReconcileReport reconcile(const std::vector<SimResult>& sims, const Schedule& schedule,
                          const EnergySystemConfig& system,
                          const std::vector<ProcessFlexConfig>& processes,
                          const PriceSeries& prices, const std::string& absorber_component);

}  // namespace dynramp

#endif
