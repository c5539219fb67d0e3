#include <doctest.h>

#include <filesystem>
#include <cmath>

#include "fixtures.hpp"

using namespace dynramp;
using namespace fixtures;

TEST_SUITE("scheduler") {

TEST_CASE("system config loads and validates") {
    auto sys = demo_system();
    CHECK(sys.components.size() == 2);
    CHECK(sys.components[0].name == "chp");
    CHECK(sys.components[0].power_to_heat == doctest::Approx(0.55));
    SUBCASE("bad part load range") {
        sys.components[0].q_min = sys.components[0].q_max;
        CHECK_THROWS_AS(sys.validate(), ConfigError);
    }
    SUBCASE("nonpositive conversion slope") {
        sys.components[1].conv_m = 0.0;
        CHECK_THROWS_AS(sys.validate(), ConfigError);
    }
}

TEST_CASE("process flex config validation") {
    auto c = flex1();
    c.surrogate.delta = 2;  // now disagrees with the limit set
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("24 hour, two component problem carries 48 binaries") {
    auto sp = build_p2(demo_system(), {flex1(), flex2()}, prices24(), demands24(), 24);
    CHECK(sp.milp.binaries.size() == 48);
    CHECK(sp.nu.size() == 2);
    CHECK(sp.nu[0].size() == 24);
}

TEST_CASE("price/demand series must cover the horizon") {
    CHECK_THROWS_AS(build_p2(demo_system(), {flex1()}, prices(12), demands24(), 24),
                    ConfigError);
    CHECK_THROWS_AS(build_p2(demo_system(), {flex1()}, prices24(), demands(12), 24),
                    ConfigError);
}

TEST_CASE("zero flexible processes reduces to unit commitment") {
    auto sp = build_p2(demo_system(), {}, prices(6), demands(6), 6);
    auto sol = solve_milp(sp.milp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    auto sched = extract_schedule(sp, sol);
    // demand met by the two components plus grid electricity
    for (int h = 0; h < 6; ++h) {
        double heat = sched.q_out[0][h] + sched.q_out[1][h];
        CHECK(heat == doctest::Approx(demands(6).heat[h]).epsilon(1e-9));
    }
}

TEST_CASE("single-period dispatch equals the enumeration oracle") {
    auto sp = build_p2(demo_system(), {}, prices(1), demands(1), 1);
    auto bb = solve_milp(sp.milp);
    auto bf = brute_force(sp.milp);
    REQUIRE(bb.status == SolveStatus::Optimal);
    CHECK(std::abs(bb.objective - bf.objective) <=
          1e-8 * std::max(1.0, std::abs(bf.objective)));
}

TEST_CASE("extracted schedules satisfy their books") {
    auto sp = build_p2(demo_system(), {flex1(), flex2()}, prices(6), demands(6), 6);
    auto sol = solve_milp(sp.milp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    auto sched = extract_schedule(sp, sol);  // re-verifies balances internally

    SUBCASE("binaries are exactly 0/1") {
        for (const auto& comp : sched.z_on)
            for (double z : comp) CHECK((z == 0.0 || z == 1.0));
    }
    SUBCASE("storage telescoping") {
        // S(tf) - S(t0) equals the integral of rho - rho_nom, which the
        // terminal pin forces to zero
        for (std::size_t pi = 0; pi < 2; ++pi) {
            double s0 = sp.processes[pi].storage_initial_frac *
                        sp.processes[pi].storage_capacity_h *
                        sp.processes[pi].limits.rho_nom;
            CHECK(sched.storage_nodes[pi].back() == doctest::Approx(s0).epsilon(1e-8));
        }
    }
    SUBCASE("cumulative cost matches the solver objective") {
        CHECK(sched.cumulative_cost.back() ==
              doctest::Approx(sol.objective).epsilon(1e-9));
    }
    SUBCASE("stale pairing is rejected") {
        auto other = build_p2(demo_system(), {flex1()}, prices(6), demands(6), 6);
        CHECK_THROWS_AS(extract_schedule(other, sol), LpError);
    }
}

TEST_CASE("steady baseline holds production constant") {
    auto sp = build_steady_baseline(demo_system(), {flex1(), flex2()}, prices(6),
                                    demands(6), 6);
    auto sol = solve_milp(sp.milp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    auto sched = extract_schedule(sp, sol);
    for (std::size_t pi = 0; pi < 2; ++pi) {
        for (double nu : sched.nu[pi]) CHECK(nu == 0.0);
        for (double e : sched.e_wh[pi])
            CHECK(e == doctest::Approx(sched.e_wh[pi][0]).epsilon(1e-12));
        for (double rho : sched.phi_nodes[pi][0]) CHECK(rho == doctest::Approx(1.0));
    }
}

TEST_CASE("ramping-mode dominance on a short horizon") {
    auto sys = demo_system();
    std::vector<ProcessFlexConfig> procs{flex1(), flex2()};
    auto p = prices(8);
    auto d = demands(8);
    auto drc = solve_milp(build_p2(sys, procs, p, d, 8).milp);
    auto src = solve_milp(build_p2_src(sys, procs, p, d, 8).milp);
    auto steady = solve_milp(build_steady_baseline(sys, procs, p, d, 8).milp);
    REQUIRE(drc.status == SolveStatus::Optimal);
    REQUIRE(src.status == SolveStatus::Optimal);
    REQUIRE(steady.status == SolveStatus::Optimal);
    CHECK(drc.objective <= src.objective + 1e-8);
    CHECK(src.objective <= steady.objective + 1e-8);
}

TEST_CASE("waste-heat integration never hurts the steady baseline") {
    auto sys = demo_system();
    auto with_wh = flex1();
    auto without = flex1();
    without.demand_scale = 0.0;  // credit no process supply at all
    auto a = solve_milp(build_steady_baseline(sys, {with_wh}, prices(6), demands(6), 6).milp);
    auto b = solve_milp(build_steady_baseline(sys, {without}, prices(6), demands(6), 6).milp);
    REQUIRE(a.status == SolveStatus::Optimal);
    REQUIRE(b.status == SolveStatus::Optimal);
    CHECK(a.objective <= b.objective + 1e-9);
}

TEST_CASE("static-mode problems bound the hourly ramping variables") {
    auto sp = build_p2_src(demo_system(), {flex1()}, prices(4), demands(4), 4);
    for (int h = 0; h < 4; ++h) {
        std::int32_t v = sp.nu[0][h];
        CHECK(sp.milp.lower[v] == doctest::Approx(limits1().src_lo));
        CHECK(sp.milp.upper[v] == doctest::Approx(limits1().src_hi));
    }
    // dynamic mode instead carries affine rows coupling nu to the rate nodes
    auto dyn = build_p2(demo_system(), {flex1()}, prices(4), demands(4), 4);
    int drc_rows = 0;
    for (const auto& r : dyn.milp.rows)
        if (r.name.rfind("drc_", 0) == 0) ++drc_rows;
    // two sides, enforced at the hour start plus every collocation node
    CHECK(drc_rows == 2 * 4 * (1 + 8));
}

TEST_CASE("a zero-width static band freezes production") {
    auto sys = demo_system();
    auto pc = flex1();
    pc.src_lo = 0.0;
    pc.src_hi = 0.0;
    auto frozen = solve_milp(build_p2_src(sys, {pc}, prices(6), demands(6), 6).milp);
    auto steady = solve_milp(build_steady_baseline(sys, {pc}, prices(6), demands(6), 6).milp);
    REQUIRE(frozen.status == SolveStatus::Optimal);
    CHECK(frozen.objective == doctest::Approx(steady.objective).epsilon(1e-9));
}

TEST_CASE("static constants must form a band") {
    auto pc = flex1();
    pc.src_lo = 0.2;
    pc.src_hi = -0.2;
    CHECK_THROWS_AS(build_p2_src(demo_system(), {pc}, prices(4), demands(4), 4),
                    ConfigError);
}

TEST_CASE("fastest ramp endpoints") {
    SUBCASE("zero-length ramp") {
        auto r = build_fastest_ramp(limits1(), 1.0, 1.0);
        CHECK(r.reachable);
        CHECK(r.time_hours == 0.0);
    }
    SUBCASE("outside the production box") {
        CHECK_THROWS_AS(build_fastest_ramp(limits1(), 0.5, 1.2), ConfigError);
    }
    SUBCASE("static slower than dynamic") {
        auto dyn = build_fastest_ramp(limits1(), 0.8, 1.2, 0.02);
        auto stat = build_fastest_ramp(limits1(), 0.8, 1.2, 0.02, true);
        CHECK(dyn.reachable);
        CHECK(stat.reachable);
        CHECK(stat.time_hours > dyn.time_hours);
        // trajectory starts and ends at the requested rates
        CHECK(dyn.phi_at_grid[0].front() == doctest::Approx(0.8));
        CHECK(dyn.phi_at_grid[0].back() == doctest::Approx(1.2).epsilon(1e-9));
    }
}

TEST_CASE("doubling the element count leaves the optimum unchanged") {
    // the chain representation is exact, so refining the collocation grid
    // only adds enforcement points; for the first-order process those are
    // implied by the hour boundaries and the objective must not move
    auto sys = demo_system();
    BuildOptions e2, e4;
    e2.elements_per_hour = 2;
    e4.elements_per_hour = 4;
    auto a = solve_milp(build_p2(sys, {flex1()}, prices(6), demands(6), 6, e2).milp);
    auto b = solve_milp(build_p2(sys, {flex1()}, prices(6), demands(6), 6, e4).milp);
    REQUIRE(a.status == SolveStatus::Optimal);
    REQUIRE(b.status == SolveStatus::Optimal);
    CHECK(std::abs(a.objective - b.objective) <= 1e-9 * std::max(1.0, std::abs(a.objective)));
}

TEST_CASE("quasi-steady process: rho itself is the scheduling variable") {
    // delta = 0 toy: xdot = u + rho, y = x; limits and surrogate collapse to
    // rho-independent constants and the chain block is empty
    ProcessModel tm;
    tm.name = "toy0";
    tm.states = {"x"};
    tm.f1 = {parse_expression("0")};
    tm.f2_u = {parse_expression("1")};
    tm.f2_rho = {parse_expression("1")};
    tm.output = parse_expression("x");
    tm.y_nom = 0.0;
    tm.u_min = -1.0;
    tm.u_max = 1.0;
    tm.rho_min = 0.6;
    tm.rho_max = 1.4;
    tm.rho_nom = 1.0;
    tm.demand = parse_expression("2 + rho");  // affine supply in the rate
    tm.nominal_state = {{"x", 0.0}};
    tm.ranges = {{"x", {-1.0, 1.0}}, {"rho", {0.6, 1.4}}};
    auto td = derive(tm);
    REQUIRE(td.delta == 0);
    auto tlim = fit_limit_set(td, {}, {});
    CHECK(tlim.delta == 0);
    // the band is the rho interval the input bounds admit
    CHECK(tlim.src_lo < tlim.src_hi);
    auto tsur = fit_demand(td, tlim, {}, {11});
    CHECK(tsur.coef.size() == 2);
    ProcessFlexConfig pc;
    pc.name = "toy0";
    pc.limits = tlim;
    pc.surrogate = tsur;
    pc.demand_scale = 3.0;
    auto sys = demo_system();
    auto sp = build_p2(sys, {pc}, prices(4), demands(4), 4);
    auto sol = solve_milp(sp.milp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    auto sched = extract_schedule(sp, sol);
    for (double nu : sched.nu[0]) {
        CHECK(nu >= tm.rho_min - 1e-9);
        CHECK(nu <= tm.rho_max + 1e-9);
    }
    auto st = solve_milp(build_steady_baseline(sys, {pc}, prices(4), demands(4), 4).milp);
    REQUIRE(st.status == SolveStatus::Optimal);
    CHECK(sol.objective <= st.objective + 1e-8);
}

TEST_CASE("schedule CSV output") {
    auto sp = build_p2(demo_system(), {flex1()}, prices(4), demands(4), 4);
    auto sol = solve_milp(sp.milp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    auto sched = extract_schedule(sp, sol);
    auto dir = std::filesystem::temp_directory_path() / "dynramp_sched_test";
    sched.save_csv(dir.string(), sp.system, sp.processes);
    auto nodes = CsvTable::load_file((dir / "schedule_nodes.csv").string());
    auto hourly = CsvTable::load_file((dir / "schedule_hourly.csv").string());
    CHECK(nodes.rows.size() == sched.node_times.size());
    CHECK(hourly.rows.size() == 4);
    CHECK(hourly.column_values("cumulative_cost").back() ==
          doctest::Approx(sol.objective).epsilon(1e-9));
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
