#include <doctest.h>

#include <cmath>

#include "dynramp/simulate.hpp"
#include "fixtures.hpp"

using namespace dynramp;
using namespace fixtures;

namespace {

RampSchedule hold_schedule(int hours) {
    RampSchedule s;
    s.delta = 1;
    s.rho_nom = 1.0;
    s.nu_per_hour.assign(hours, 0.0);
    return s;
}

// An aggressive but feasible first-order schedule: ramp up near the limit,
// hold, ramp back down.
RampSchedule swing_schedule() {
    const auto& lim = limits1();
    RampSchedule s;
    s.delta = 1;
    s.rho_nom = 1.0;
    double rho = 1.0;
    for (int h = 0; h < 6; ++h) {
        double nu;
        if (h < 2) nu = 0.9 * lim.eval_hi({rho});
        else if (h < 3) nu = 0.0;
        else nu = 0.9 * std::max(lim.eval_lo({rho}), (0.8 - rho));
        // keep rho inside the box
        nu = std::min(nu, 1.2 - rho);
        nu = std::max(nu, 0.8 - rho);
        s.nu_per_hour.push_back(nu);
        rho += nu;
    }
    return s;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("steady operation holds the output for a day") {
    auto res = simulate(model1(), deriv1(), hold_schedule(24), 1e-3);
    CHECK(res.max_output_deviation <= 1e-9);
    CHECK(res.clips.empty());
    // states stay at the recovered steady values
    CHECK(res.states[0].back() == doctest::Approx(0.1367).epsilon(1e-9));
    // input stays at the steady coolant flow
    CHECK(res.u.front() == doctest::Approx(390.0).epsilon(2e-3));
    CHECK(res.u.back() == doctest::Approx(res.u.front()).epsilon(1e-8));
}

TEST_CASE("feasible swings track to integration accuracy") {
    auto res = simulate(model1(), deriv1(), swing_schedule(), 1e-3);
    CHECK(res.clips.empty());
    CHECK(res.max_output_deviation <= 1e-8);
}

TEST_CASE("fourth-order step-size convergence") {
    auto sched = swing_schedule();
    double d1 = simulate(model1(), deriv1(), sched, 8e-3).max_output_deviation;
    double d2 = simulate(model1(), deriv1(), sched, 4e-3).max_output_deviation;
    if (d1 > 1e-11) {
        double ratio = d1 / std::max(d2, 1e-300);
        CHECK(ratio > 6.0);  // 4th order gives ~16x, allow slack above the floor
    }
    CHECK(d2 <= d1 + 1e-15);
}

TEST_CASE("overdriving the ramping limit breaks tracking and logs clips") {
    RampSchedule s;
    s.delta = 1;
    s.rho_nom = 1.0;
    double hi = deriv1().nu_limits_exact({{1.0}}).nu_max;
    s.nu_per_hour = {1.1 * hi, 0.0, 0.0};
    auto res = simulate(model1(), deriv1(), s, 1e-3);
    CHECK(!res.clips.empty());
    CHECK(res.max_output_deviation > 1e-4);
}

TEST_CASE("state range abort") {
    RampSchedule s;
    s.delta = 1;
    s.rho_nom = 1.0;
    // drive rho far outside the declared box
    s.nu_per_hour = {0.9, 0.9, 0.9, 0.9};
    CHECK_THROWS_AS(simulate(model1(), deriv1(), s, 1e-3), SimulationError);
}

TEST_CASE("simulated waste heat obeys the steady energy balance") {
    auto res = simulate(model1(), deriv1(), hold_schedule(2), 1e-3);
    // at steady state: F_c alpha_c (T - T_c) = (T_f - T) rho / V + c k e^{-N/T}
    double T = res.states[1].front();
    double c = res.states[0].front();
    double balance = (0.3947 - T) * 1.0 / 20.0 + c * 300.0 * std::exp(-5.0 / T);
    CHECK(res.demand.front() == doctest::Approx(balance).epsilon(1e-9));
}

TEST_CASE("jacketed reactor second-order schedule tracks") {
    // A gentle swing: sustained rho_dot above ~0.2 is infeasible for the
    // jacketed reactor, so the hourly accelerations stay small.
    RampSchedule s;
    s.delta = 2;
    s.rho_nom = 1.0;
    s.nu_per_hour = {0.1, -0.1, -0.1, 0.1};  // rho swings up to 1.1 and back
    auto res = simulate(model2(), deriv2(), s, 1e-3);
    CHECK(res.clips.empty());
    CHECK(res.max_output_deviation <= 1e-8);
    // rho(t) ends back at the nominal rate with zero slope
    CHECK(res.rho.back() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fastest ramps replay cleanly on the nonlinear models") {
    // the minimal-time trajectories ride the conservative limits, so the
    // feedforward must track them without clipping
    SUBCASE("benchmark reactor") {
        auto r = build_fastest_ramp(limits1(), 0.8, 1.2, 0.01);
        REQUIRE(r.reachable);
        RampSchedule s;
        s.delta = 1;
        s.rho_nom = 1.0;
        s.step_hours = r.step_hours;
        s.nu_per_hour = r.nu_per_step;
        s.phi0 = {0.8};
        auto sim = simulate(model1(), deriv1(), s, 1e-3);
        CHECK(sim.clips.empty());
        CHECK(sim.max_output_deviation <= 1e-6);
        double u_lo = 1e300, u_hi = -1e300;
        for (double u : sim.u) {
            u_lo = std::min(u_lo, u);
            u_hi = std::max(u_hi, u);
        }
        CHECK(u_lo >= 0.0);
        CHECK(u_hi <= 700.0);
        CHECK(sim.rho.back() == doctest::Approx(1.2).epsilon(1e-9));
    }
    SUBCASE("jacketed reactor") {
        auto r = build_fastest_ramp(limits2(), 0.8, 1.2, 0.01);
        REQUIRE(r.reachable);
        RampSchedule s;
        s.delta = 2;
        s.rho_nom = 1.0;
        s.step_hours = r.step_hours;
        s.nu_per_hour = r.nu_per_step;
        s.phi0 = {0.8, 0.0};
        auto sim = simulate(model2(), deriv2(), s, 1e-3);
        CHECK(sim.clips.empty());
        CHECK(sim.max_output_deviation <= 1e-6);
        CHECK(sim.rho.back() == doctest::Approx(1.2).epsilon(1e-6));
    }
}

TEST_CASE("hourly demand integrals") {
    auto res = simulate(model1(), deriv1(), hold_schedule(3), 1e-3);
    auto hourly = res.hourly_demand_energy();
    REQUIRE(hourly.size() == 3);
    for (double e : hourly)
        CHECK(e == doctest::Approx(res.demand.front()).epsilon(1e-9));
}

TEST_CASE("reconciliation") {
    auto sys = demo_system();
    auto p = prices(6);
    auto d = demands(6);
    SUBCASE("zero-residual processes reproduce the scheduled cost") {
        auto pc = flex1();
        pc.demand_scale = 0.0;  // process contributes nothing, surrogate exact
        auto sp = build_p2(sys, {pc}, p, d, 6);
        auto sol = solve_milp(sp.milp);
        REQUIRE(sol.status == SolveStatus::Optimal);
        auto sched = extract_schedule(sp, sol);
        auto sim = simulate(model1(), deriv1(), hold_schedule(6), 1e-3);
        auto rep = reconcile({sim}, sched, sys, {pc}, p, "boiler");
        CHECK(rep.realized_cost == doctest::Approx(rep.scheduled_cost).epsilon(1e-10));
        for (double r : rep.unmet_heat) CHECK(std::abs(r) < 1e-9);
    }
    SUBCASE("real surrogate error is absorbed by the boiler") {
        auto pc = flex1();
        auto sp = build_p2(sys, {pc}, p, d, 6);
        auto sol = solve_milp(sp.milp);
        REQUIRE(sol.status == SolveStatus::Optimal);
        auto sched = extract_schedule(sp, sol);
        RampSchedule rs;
        rs.delta = 1;
        rs.rho_nom = 1.0;
        rs.nu_per_hour = sched.nu[0];
        auto sim = simulate(model1(), deriv1(), rs, 1e-3);
        auto rep = reconcile({sim}, sched, sys, {pc}, p, "boiler");
        // whenever the boiler is on it has room to absorb the small residual
        for (int h = 0; h < 6; ++h) {
            if (sched.z_on[1][h] > 0.5) CHECK(std::abs(rep.unmet_heat[h]) < 1e-9);
        }
        CHECK(std::abs(rep.realized_cost - rep.scheduled_cost) <
              0.05 * std::abs(rep.scheduled_cost));
        CHECK(rep.summary().find("realized cost") != std::string::npos);
    }
    SUBCASE("boiler off and deficit present leaves a reported residual") {
        auto pc = flex1();
        auto sp = build_p2(sys, {pc}, p, d, 6);
        auto sol = solve_milp(sp.milp);
        REQUIRE(sol.status == SolveStatus::Optimal);
        auto sched = extract_schedule(sp, sol);
        // force the absorber off and fake a supply shortfall
        for (int h = 0; h < 6; ++h) {
            sched.z_on[1][h] = 0.0;
            sched.q_out[1][h] = 0.0;
            sched.e_wh[0][h] += 5.0;  // scheduled more than realized
        }
        RampSchedule rs;
        rs.delta = 1;
        rs.rho_nom = 1.0;
        rs.nu_per_hour = sched.nu[0];
        auto sim = simulate(model1(), deriv1(), rs, 1e-3);
        auto rep = reconcile({sim}, sched, sys, {pc}, p, "boiler");
        bool any = false;
        for (double r : rep.unmet_heat)
            if (std::abs(r) > 1.0) any = true;
        CHECK(any);
    }
}

}  // TEST_SUITE
