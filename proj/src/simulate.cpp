#include "dynramp/simulate.hpp"

#include <cmath>
#include <sstream>

#include "dynramp/csv.hpp"

namespace dynramp {

void RampSchedule::phi_at(double t, std::vector<double>& phi, double* nu) const {
    const int H = static_cast<int>(nu_per_hour.size());
    int h = std::min(H - 1, static_cast<int>(std::floor(t / step_hours)));
    if (h < 0) h = 0;
    double s = t - h * step_hours;
    const int dim = std::max(delta, 1);

    // Advance step starts with the exact Taylor maps.
    std::vector<double> start(dim, 0.0);
    if (delta >= 1) {
        if (!phi0.empty()) start = phi0;
        else start[0] = rho_nom;
    }
    for (int k = 0; k < h; ++k) {
        std::vector<double> next(dim, 0.0);
        for (int m = 0; m < delta; ++m) {
            ChainMap map = chain_value(delta, m, step_hours);
            next[m] = map.nu_coef * nu_per_hour[k];
            for (int j = 0; j < delta; ++j) next[m] += map.phi_coef[j] * start[j];
        }
        start = next;
    }
    phi.assign(dim, 0.0);
    for (int m = 0; m < delta; ++m) {
        ChainMap map = chain_value(delta, m, s);
        phi[m] = map.nu_coef * nu_per_hour[h];
        for (int j = 0; j < delta; ++j) phi[m] += map.phi_coef[j] * start[j];
    }
    if (delta == 0) phi[0] = nu_per_hour[h];
    if (nu) *nu = nu_per_hour[h];
}

namespace {

// Cached per-hour phi starts so the RK4 loop does not redo the hour walk.
class PhiEvaluator {
  public:
    PhiEvaluator(const RampSchedule& sched) : sched_(sched) {
        const int H = static_cast<int>(sched.nu_per_hour.size());
        const int dim = std::max(sched.delta, 1);
        starts_.assign(H + 1, std::vector<double>(dim, 0.0));
        if (sched.delta >= 1) {
            if (!sched.phi0.empty()) starts_[0] = sched.phi0;
            else starts_[0][0] = sched.rho_nom;
        }
        for (int k = 0; k < H; ++k) {
            for (int m = 0; m < sched.delta; ++m) {
                ChainMap map = chain_value(sched.delta, m, sched.step_hours);
                starts_[k + 1][m] = map.nu_coef * sched.nu_per_hour[k];
                for (int j = 0; j < sched.delta; ++j)
                    starts_[k + 1][m] += map.phi_coef[j] * starts_[k][j];
            }
        }
    }

    int segment_of(double t) const {
        const int H = static_cast<int>(sched_.nu_per_hour.size());
        return std::min(H - 1,
                        std::max(0, static_cast<int>(std::floor(
                                        t / sched_.step_hours + 1e-12))));
    }

    void at(double t, std::vector<double>& phi, double& nu) const {
        at_hour(t, segment_of(t), phi, nu);
    }

    // Evaluation pinned to a given segment: RK4 stages of a step must use that
    // step's segment even when the stage time lands on the next boundary.
    void at_hour(double t, int h, std::vector<double>& phi, double& nu) const {
        double s = t - h * sched_.step_hours;
        const int dim = std::max(sched_.delta, 1);
        phi.assign(dim, 0.0);
        for (int m = 0; m < sched_.delta; ++m) {
            ChainMap map = chain_value(sched_.delta, m, s);
            phi[m] = map.nu_coef * sched_.nu_per_hour[h];
            for (int j = 0; j < sched_.delta; ++j)
                phi[m] += map.phi_coef[j] * starts_[h][j];
        }
        if (sched_.delta == 0) phi[0] = sched_.nu_per_hour[h];
        nu = sched_.nu_per_hour[h];
    }

  private:
    const RampSchedule& sched_;
    std::vector<std::vector<double>> starts_;
};

}  // namespace

SimResult simulate(const ProcessModel& model, const RampingDerivation& d,
                   const RampSchedule& schedule, double dt_hours) {
    if (dt_hours <= 0.0 || dt_hours > 1e-2)
        throw SimulationError("dt must be positive and at most 0.01 h");
    if (schedule.delta != d.delta)
        throw SimulationError("schedule order does not match the derivation");

    const double t_end = schedule.hours();
    const std::size_t steps = static_cast<std::size_t>(std::llround(t_end / dt_hours));
    const std::size_t n = model.dim();

    CompiledDynamics dyn(model);
    PhiEvaluator phi_eval(schedule);

    SimResult res;
    res.y_nom = model.y_nom;
    res.states.assign(n, {});

    // Start on the manifold: x(0) = Gamma(phi(0)).
    std::vector<double> phi;
    double nu;
    phi_eval.at(0.0, phi, nu);
    RampingState phi_state{d.delta >= 1 ? phi : std::vector<double>{}};
    std::vector<double> x = d.solve_gamma(phi_state);
    std::vector<double> gamma_warm = x;

    CompiledExpr output(model.output, model.states);

    auto input_at = [&](double t, int hour, std::vector<double>& warm) {
        if (hour < 0) phi_eval.at(t, phi, nu);
        else phi_eval.at_hour(t, hour, phi, nu);
        RampingState ps{d.delta >= 1 ? phi
                                     : std::vector<double>{}};
        std::vector<double> xg;
        try {
            xg = d.solve_gamma(ps, warm);
        } catch (const DerivationError& e) {
            throw SimulationError("feedforward state recovery failed at t=" +
                                  std::to_string(t) + ": " + e.what());
        }
        warm = xg;
        std::vector<double> packed = d.pack(xg, ps);
        double a = d.eval_alpha(n, packed);
        double bu = d.eval_beta_u(packed);
        double br = d.eval_beta_rho(packed);
        double nu_eff = d.delta >= 1 ? nu : phi[0];
        double u_raw = (-a - br * nu_eff) / bu;
        return std::pair<double, double>(u_raw, phi[0]);
    };

    std::vector<double> k1(n), k2(n), k3(n), k4(n), xt(n);
    double max_dev = 0.0;
    // Schedules that touch the conservative limit exactly produce inputs that
    // sit on an input bound up to rounding; only material truncation counts
    // as a clip event.
    const double clip_tol = 1e-6 * (model.u_max - model.u_min);
    for (std::size_t step = 0; step <= steps; ++step) {
        double t = step * dt_hours;
        auto [u_raw, rho_now] = input_at(t, -1, gamma_warm);
        double u = std::min(std::max(u_raw, model.u_min), model.u_max);
        if (u_raw < model.u_min - clip_tol || u_raw > model.u_max + clip_tol)
            res.clips.push_back({t, u_raw, u});

        double y = output.eval(x);
        max_dev = std::max(max_dev, std::abs(y - model.y_nom));

        res.time.push_back(t);
        for (std::size_t i = 0; i < n; ++i) res.states[i].push_back(x[i]);
        res.u.push_back(u);
        res.rho.push_back(rho_now);
        res.output.push_back(y);
        res.demand.push_back(dyn.demand(x, rho_now, u));

        for (std::size_t i = 0; i < n; ++i) {
            auto it = model.ranges.find(model.states[i]);
            if (it != model.ranges.end() &&
                (x[i] < it->second.lo - 0.05 * (it->second.hi - it->second.lo) ||
                 x[i] > it->second.hi + 0.05 * (it->second.hi - it->second.lo)))
                throw SimulationError("state '" + model.states[i] + "' left its range at t=" +
                                      std::to_string(t) + " (value " + std::to_string(x[i]) +
                                      ")");
        }
        if (step == steps) break;

        // RK4 with the input refreshed at each stage time; all stages stay on
        // this step's segment so boundary steps integrate consistently.
        const int step_hour = phi_eval.segment_of(t);
        std::vector<double> wtmp = gamma_warm;
        auto u_of = [&](double tt) {
            auto [ur, rr] = input_at(tt, step_hour, wtmp);
            return std::pair<double, double>(
                std::min(std::max(ur, model.u_min), model.u_max), rr);
        };
        double h2 = dt_hours / 2.0;
        auto [u1, r1] = std::pair<double, double>(u, rho_now);
        dyn.rhs(x, r1, u1, k1);
        for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + h2 * k1[i];
        auto [u2, r2] = u_of(t + h2);
        dyn.rhs(xt, r2, u2, k2);
        for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + h2 * k2[i];
        dyn.rhs(xt, r2, u2, k3);
        for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + dt_hours * k3[i];
        auto [u4, r4] = u_of(t + dt_hours);
        dyn.rhs(xt, r4, u4, k4);
        for (std::size_t i = 0; i < n; ++i)
            x[i] += dt_hours / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    res.max_output_deviation = max_dev;
    return res;
}

std::vector<double> SimResult::hourly_demand_energy() const {
    std::vector<double> out;
    if (time.size() < 2) return out;
    double dt = time[1] - time[0];
    int hours = static_cast<int>(std::lround(time.back()));
    out.assign(hours, 0.0);
    for (std::size_t i = 0; i + 1 < time.size(); ++i) {
        int h = std::min(hours - 1, static_cast<int>(time[i] + 1e-12));
        out[h] += 0.5 * (demand[i] + demand[i + 1]) * dt;
    }
    return out;
}

void SimResult::save_csv(const std::string& path,
                         const std::vector<std::string>& state_names) const {
    CsvWriter w(path);
    std::vector<std::string> head{"time_h"};
    for (const auto& s : state_names) head.push_back(s);
    head.push_back("u");
    head.push_back("rho");
    head.push_back("output");
    head.push_back("deviation");
    head.push_back("demand");
    w.write_header(head);
    for (std::size_t i = 0; i < time.size(); ++i) {
        std::vector<double> row{time[i]};
        for (const auto& s : states) row.push_back(s[i]);
        row.push_back(u[i]);
        row.push_back(rho[i]);
        row.push_back(output[i]);
        row.push_back(output[i] - y_nom);
        row.push_back(demand[i]);
        w.write_row(row);
    }
    w.close();
}

ReconcileReport reconcile(const std::vector<SimResult>& sims, const Schedule& schedule,
                          const EnergySystemConfig& system,
                          const std::vector<ProcessFlexConfig>& processes,
                          const PriceSeries& prices, const std::string& absorber_component) {
    if (sims.size() != processes.size())
        throw SimulationError("need one simulation per process");
    const int H = schedule.horizon;

    std::ptrdiff_t absorber = -1;
    for (std::size_t ci = 0; ci < system.components.size(); ++ci)
        if (system.components[ci].name == absorber_component)
            absorber = static_cast<std::ptrdiff_t>(ci);
    if (absorber < 0)
        throw SimulationError("unknown absorber component '" + absorber_component + "'");
    const Component& ab = system.components[absorber];

    ReconcileReport rep;
    rep.scheduled_supply.assign(H, 0.0);
    rep.realized_supply.assign(H, 0.0);
    rep.boiler_adjustment.assign(H, 0.0);
    rep.unmet_heat.assign(H, 0.0);
    rep.grid_adjustment.assign(H, 0.0);

    std::vector<std::vector<double>> realized(processes.size());
    for (std::size_t pi = 0; pi < processes.size(); ++pi) {
        realized[pi] = sims[pi].hourly_demand_energy();
        if (static_cast<int>(realized[pi].size()) < H)
            throw SimulationError("simulation horizon shorter than the schedule");
    }

    rep.scheduled_cost = schedule.cumulative_cost.back();
    double realized_cost = 0.0;
    for (int h = 0; h < H; ++h) {
        double sched_sup = 0.0, real_sup = 0.0;
        for (std::size_t pi = 0; pi < processes.size(); ++pi) {
            sched_sup += schedule.e_wh[pi][h];
            real_sup += processes[pi].demand_scale * realized[pi][h];
        }
        rep.scheduled_supply[h] = sched_sup;
        rep.realized_supply[h] = real_sup;

        // Heat surplus (positive) reduces the absorber output within its
        // scheduled on/off state; the remainder is reported as unmet.
        double imbalance = real_sup - sched_sup;
        double q_b = schedule.q_out[absorber][h];
        double z_b = schedule.z_on[absorber][h];
        double lo = z_b > 0.5 ? ab.q_min : 0.0;
        double hi = z_b > 0.5 ? ab.q_max : 0.0;
        double adjusted = std::min(std::max(q_b - imbalance, lo), hi);
        double absorbed = q_b - adjusted;
        rep.boiler_adjustment[h] = adjusted - q_b;
        rep.unmet_heat[h] = imbalance - absorbed;

        double hour_cost = schedule.hourly_cost[h];
        // Fuel change of the absorber: q_in = (q_out - b z)/m.
        double dq_in = (adjusted - q_b) / ab.conv_m;
        hour_cost += prices.fuel[h] * dq_in;
        // Electricity coupling of the absorber (if any) rebalanced via grid.
        if (ab.power_to_heat > 0.0) {
            double d_el = ab.power_to_heat * (adjusted - q_b);
            rep.grid_adjustment[h] = -d_el;
            hour_cost += (d_el > 0 ? -prices.sell[h] * d_el : prices.buy[h] * (-d_el));
        }
        realized_cost += hour_cost;
    }
    rep.realized_cost = realized_cost;
    return rep;
}

std::string ReconcileReport::summary() const {
    std::ostringstream os;
    double max_unmet = 0.0, max_adj = 0.0;
    for (double v : unmet_heat) max_unmet = std::max(max_unmet, std::abs(v));
    for (double v : boiler_adjustment) max_adj = std::max(max_adj, std::abs(v));
    os << "scheduled cost: " << scheduled_cost << "\n";
    os << "realized cost:  " << realized_cost << "\n";
    os << "cost delta:     " << realized_cost - scheduled_cost << "\n";
    os << "max absorber adjustment: " << max_adj << "\n";
    os << "max unmet heat residual: " << max_unmet << "\n";
    return os.str();
}

}  // namespace dynramp
