// Acceptance suite: runs every top-level requirement end to end against the
#include <cstdarg>
// shipped models and dataset, printing one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "dynramp/limitfit.hpp"
#include "dynramp/linearize.hpp"
#include "dynramp/scheduler.hpp"
#include "dynramp/simulate.hpp"

using namespace dynramp;
using Clock = std::chrono::steady_clock;

namespace {

const std::string kData = DYNRAMP_DATA_DIR;

int g_failures = 0;

void report(int number, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %-34s %s\n", pass ? "PASS" : "FAIL", number, name,
                detail.c_str());
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double closed_form_T(double rho) {
    return 5.0 / std::log(20.0 * 0.1367 * 300.0 / (rho * (1.0 - 0.1367)));
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// Random safe expression generator shared with the unit suite (duplicated
// here so the acceptance binary stays standalone).
Expr random_expr(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 8);
    std::uniform_real_distribution<double> cval(0.2, 3.0);
    const char* vars[3] = {"x", "T", "rho"};
    switch (pick(rng)) {
        case 0: return Expr::constant(cval(rng));
        case 1: return Expr::variable(vars[rng() % 3]);
        case 2: return random_expr(rng, depth - 1) + random_expr(rng, depth - 1);
        case 3: return random_expr(rng, depth - 1) - random_expr(rng, depth - 1);
        case 4: return random_expr(rng, depth - 1) * random_expr(rng, depth - 1);
        case 5:
            return random_expr(rng, depth - 1) /
                   (Expr::constant(1.0) + Expr::variable(vars[rng() % 3]));
        case 6:
            return Expr::power(Expr::constant(1.0) + Expr::variable(vars[rng() % 3]),
                               Expr::constant(static_cast<double>(1 + rng() % 3)));
        case 7: return Expr::exp(Expr::constant(-1.0) * Expr::variable(vars[rng() % 3]));
        default: return Expr::ln(Expr::constant(1.0) + Expr::variable(vars[rng() % 3]));
    }
}

}  // namespace

int main() {
    std::printf("acceptance suite: deriving, fitting, and scheduling from %s\n",
                kData.c_str());

    ProcessModel m1 = ProcessModel::load_file(kData + "/cstr1.model");
    ProcessModel m2 = ProcessModel::load_file(kData + "/cstr2.model");
    RampingDerivation d1 = derive(m1);
    RampingDerivation d2 = derive(m2);

    const std::vector<VariableRange> box1{{0.8, 1.2}};
    const std::vector<VariableRange> box2{{0.8, 1.2}, {-0.45, 0.45}};
    AffineLimitSet lim1 = fit_limit_set(d1, box1, {100});
    AffineLimitSet lim2 = fit_limit_set(d2, box2, {100, 100});
    DemandSurrogate sur1 = fit_demand(d1, lim1, box1, {11, 11});
    DemandSurrogate sur2 = fit_demand(d2, lim2, box2, {11, 11, 11});

    EnergySystemConfig sys = EnergySystemConfig::load_file(kData + "/system.kv");
    PriceSeries prices = PriceSeries::load_csv(kData + "/prices_24h.csv");
    DemandSeries demands = DemandSeries::load_csv(kData + "/demands_24h.csv");
    ProcessFlexConfig p1, p2;
    p1.name = "cstr1";
    p1.limits = lim1;
    p1.surrogate = sur1;
    p1.demand_scale = 10.0 / sur1.nominal_demand;
    p2.name = "cstr2";
    p2.limits = lim2;
    p2.surrogate = sur2;
    p2.demand_scale = 10.0 / sur2.nominal_demand;
    std::vector<ProcessFlexConfig> procs{p1, p2};

    // --- 1: ramp-time reproduction ------------------------------------------
    double t_drc1 = 0, t_src1 = 0;
    {
        auto t0 = Clock::now();
        auto drc = build_fastest_ramp(lim1, 0.8, 1.2, 0.01, false);
        double s_drc = seconds_since(t0);
        t0 = Clock::now();
        auto src = build_fastest_ramp(lim1, 0.8, 1.2, 0.01, true);
        double s_src = seconds_since(t0);
        t_drc1 = drc.time_hours;
        t_src1 = src.time_hours;
        double ratio = src.time_hours / drc.time_hours;
        bool pass = std::abs(drc.time_hours - 1.7) <= 0.15 &&
                    std::abs(src.time_hours - 2.3) <= 0.15 && ratio >= 1.25 &&
                    ratio <= 1.45 && s_drc < 5.0 && s_src < 5.0;
        report(1, "fastest ramp times", pass,
               fmt("drc %.2f h, src %.2f h, ratio %.3f (%.1f s / %.1f s)", drc.time_hours,
                   src.time_hours, ratio, s_drc, s_src));
    }

    // --- 2: second-order inertia ---------------------------------------------
    {
        auto t0 = Clock::now();
        auto ramp2 = build_fastest_ramp(lim2, 0.8, 1.2, 0.01, false);
        double secs = seconds_since(t0);
        bool pass = d2.delta == 2 && ramp2.time_hours >= t_drc1 + 0.4 && secs < 30.0;
        report(2, "jacketed reactor order and ramp", pass,
               fmt("delta=%d, ramp %.2f h vs %.2f h (%.1f s)", d2.delta, ramp2.time_hours,
                   t_drc1, secs));
    }

    // --- 3: state recovery against the closed form ---------------------------
    {
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            double rho = 0.8 + 0.4 * i / 99.0;
            auto x = d1.solve_gamma({{rho}});
            worst = std::max(worst, std::abs(x[1] - closed_form_T(rho)));
        }
        report(3, "Newton recovery vs closed form", worst <= 1e-9,
               fmt("max |T error| = %.2e", worst));
    }

    // --- 4: symbolic correctness ---------------------------------------------
    {
        std::mt19937 rng(0xD1FF);
        const char* vars[3] = {"x", "T", "rho"};
        int checked = 0;
        double worst_fd = 0.0;
        while (checked < 200) {
            Expr e = random_expr(rng, 4);
            std::string v = vars[rng() % 3];
            Expr de = e.diff(v);
            std::uniform_real_distribution<double> u(0.5, 2.0);
            Binding b{{"x", u(rng)}, {"T", u(rng)}, {"rho", u(rng)}};
            double h = 1e-6 * std::max(1.0, std::abs(b[v]));
            Binding bp = b, bm = b;
            bp[v] += h;
            bm[v] -= h;
            double fd, sym;
            try {
                fd = (e.eval(bp) - e.eval(bm)) / (2 * h);
                sym = de.eval(b);
            } catch (const EvalError&) {
                continue;
            }
            if (!std::isfinite(fd) || std::abs(fd) > 1e6) continue;
            worst_fd = std::max(worst_fd, std::abs(sym - fd) / std::max(1.0, std::abs(sym)));
            ++checked;
        }

        // Printed chain pieces for the jacketed reactor, assembled exactly as
        // the supplementary derivation lays them out.
        Expr cdot = parse_expression("(1 - c)*rho/20 - c*300*exp(-5/T)");
        Expr Tdot = parse_expression(
            "(0.3947 - T)*rho/20 + c*300*exp(-5/T) + 4.84*(T_j - T)");
        Expr Tjdot_drift = parse_expression("14.66*(T - T_j)");
        Expr alpha1_p = cdot;
        Expr alpha2_p = parse_expression(
            "-(rho/20 + 300*exp(-5/T))*((1 - c)*rho/20 - c*300*exp(-5/T))"
            " - (c*300*5*exp(-5/T)/T^2)*((0.3947 - T)*rho/20 + c*300*exp(-5/T)"
            " + 4.84*(T_j - T)) + ((1 - c)/20)*rho_d1");
        Expr da2dc = parse_expression(
            "-(5*c*90000*exp(-10/T)/T^2)"
            " - (5*300*(c*300*exp(-5/T) - 4.84*(-T_j + T) + rho*(0.3947 - T)/20)"
            "*exp(-5/T)/T^2)"
            " + (-(300*exp(-5/T)) - rho/20)^2 - rho_d1/20");
        Expr da2dT = parse_expression(
            "-(25*c*300*(c*300*exp(-5/T) - 4.84*(-T_j + T) + rho*(0.3947 - T)/20)"
            "*exp(-5/T)/T^4)"
            " - (5*c*300*(-(300*exp(-5/T)) - rho/20)*exp(-5/T)/T^2)"
            " - (5*c*300*(5*c*300*exp(-5/T)/T^2 - 4.84 - rho/20)*exp(-5/T)/T^2)"
            " - (5*300*(-(c*300*exp(-5/T)) + rho*(1 - c)/20)*exp(-5/T)/T^2)"
            " + (2*5*c*300*(c*300*exp(-5/T) - 4.84*(-T_j + T) + rho*(0.3947 - T)/20)"
            "*exp(-5/T)/T^3)");
        Expr da2dTj = parse_expression("-(5*4.84*c*300*exp(-5/T)/T^2)");
        Expr da2drho = parse_expression(
            "-(5*c*300*(0.3947 - T)*exp(-5/T)/(T^2*20))"
            " + (1 - c)*(-(300*exp(-5/T)) - rho/20)/20"
            " - (-(c*300*exp(-5/T)) + rho*(1 - c)/20)/20");
        Expr alpha3_p = da2dc * cdot + da2dT * Tdot + da2dTj * Tjdot_drift +
                        da2drho * Expr::variable("rho_d1");
        Expr beta_u_p =
            parse_expression("5*4.84*c*300*exp(-5/T)*1.95e-4*(T_j - 0.3816)/T^2");
        Expr beta_rho_p = parse_expression("(1 - c)/20");

        std::mt19937 rng2(0xCA5E);
        std::uniform_real_distribution<double> uc(0.08, 0.3), uT(0.63, 0.84),
            ur(0.8, 1.2), ud(-0.45, 0.45);
        double worst_chain = 0.0;
        for (int i = 0; i < 100; ++i) {
            double c = uc(rng2), T = uT(rng2), Tj = uT(rng2), rho = ur(rng2),
                   rd = ud(rng2);
            Binding b{{"c", c}, {"T", T}, {"T_j", Tj}, {"rho", rho}, {"rho_d1", rd}};
            std::vector<double> packed{c, T, Tj, rho, rd};
            auto rel = [&](double a, double bb) {
                return std::abs(a - bb) / std::max(1.0, std::abs(bb));
            };
            worst_chain = std::max(worst_chain, rel(d2.eval_alpha(1, packed), alpha1_p.eval(b)));
            worst_chain = std::max(worst_chain, rel(d2.eval_alpha(2, packed), alpha2_p.eval(b)));
            worst_chain = std::max(worst_chain, rel(d2.eval_alpha(3, packed), alpha3_p.eval(b)));
            worst_chain = std::max(worst_chain, rel(d2.eval_beta_u(packed), beta_u_p.eval(b)));
            worst_chain =
                std::max(worst_chain, rel(d2.eval_beta_rho(packed), beta_rho_p.eval(b)));
        }
        bool pass = worst_fd <= 1e-6 && worst_chain <= 1e-9;
        report(4, "symbolic derivatives", pass,
               fmt("finite-diff rel err %.2e, chain-vs-printed rel err %.2e", worst_fd,
                   worst_chain));
    }

    // --- 5: conservativeness -------------------------------------------------
    {
        auto check = [&](const RampingDerivation& d, const AffineLimitSet& lim,
                         const std::vector<VariableRange>& box,
                         const std::vector<int>& fit_counts, double* grid_viol,
                         double* dense_ratio) {
            auto t = sample_limits(d, box, fit_counts);
            double gv = 0.0;
            for (std::size_t i = 0; i < t.phi.size(); ++i) {
                gv = std::max(gv, lim.eval_hi(t.phi[i]) - t.nu_max[i]);
                gv = std::max(gv, t.nu_min[i] - lim.eval_lo(t.phi[i]));
            }
            *grid_viol = gv;
            std::vector<int> dense;
            for (int c : fit_counts) dense.push_back((c - 1) * 4 + 1);
            auto td = sample_limits(d, box, dense);
            double ratio = 0.0;
            for (std::size_t i = 0; i < td.phi.size(); ++i) {
                double width = lim.eval_hi(td.phi[i]) - lim.eval_lo(td.phi[i]);
                double v = std::max(lim.eval_hi(td.phi[i]) - td.nu_max[i],
                                    td.nu_min[i] - lim.eval_lo(td.phi[i]));
                ratio = std::max(ratio, v / width);
            }
            *dense_ratio = ratio;
        };
        double gv1, r1v, gv2, r2v;
        check(d1, lim1, box1, {100}, &gv1, &r1v);
        check(d2, lim2, box2, {100, 100}, &gv2, &r2v);
        bool pass = gv1 <= 1e-12 && gv2 <= 1e-12 && r1v <= 1e-3 && r2v <= 1e-3;
        report(5, "conservative shifted limits", pass,
               fmt("grid viol %.1e / %.1e, dense ratio %.1e / %.1e", gv1, gv2, r1v, r2v));
    }

    // --- 6: demand surrogate fidelity ----------------------------------------
    {
        double f1 = 100.0 * sur1.deviation_fraction();
        double f2 = 100.0 * sur2.deviation_fraction();
        bool pass1 = f1 >= 3.0 && f1 <= 5.0;
        bool pass2 = f2 >= 0.5 && f2 <= 1.5;
        report(6, "demand surrogate deviation", pass1 && pass2,
               fmt("cstr1 %.2f%% (target 4 +/- 1), cstr2 %.2f%% (target 1 +/- 0.5)", f1,
                   f2));
    }

    // --- 10 & 11 need the scheduling solves; run 11 first for clean timing ---
    MilpSolution drc_sol;
    ScheduleProblem drc_sp;
    {
        auto t0 = Clock::now();
        drc_sp = build_p2(sys, procs, prices, demands, 24);
        SolverOptions o;
        o.gap_tol = 1e-3;
        MilpSolution sol = solve_milp(drc_sp.milp, o);
        double secs = seconds_since(t0);
        bool pass = sol.feasible() && sol.gap <= 1e-3 + 1e-12 && secs < 120.0;
        report(11, "48-binary scheduling runtime", pass,
               fmt("status %s, gap %.2e, %ld nodes, %.1f s", to_string(sol.status).c_str(),
                   sol.gap, sol.node_count, secs));
    }

    // --- 10: dominance and box widening --------------------------------------
    {
        drc_sol = solve_milp(drc_sp.milp);  // gap 0
        auto src_sol = solve_milp(build_p2_src(sys, procs, prices, demands, 24).milp);
        auto steady_sol =
            solve_milp(build_steady_baseline(sys, procs, prices, demands, 24).milp);

        // widen the benchmark reactor's operating box to +/- 50%, keeping the
        // same demand surrogate so the objectives stay comparable
        AffineLimitSet lim1w = fit_limit_set(d1, {{0.5, 1.5}}, {100});
        lim1w.rho_min = 0.5;
        lim1w.rho_max = 1.5;
        ProcessFlexConfig p1w = p1;
        p1w.limits = lim1w;
        auto wide_sol =
            solve_milp(build_p2(sys, {p1w, p2}, prices, demands, 24).milp);

        bool ok = drc_sol.status == SolveStatus::Optimal &&
                  src_sol.status == SolveStatus::Optimal &&
                  steady_sol.status == SolveStatus::Optimal &&
                  wide_sol.status == SolveStatus::Optimal;
        bool order = ok && drc_sol.objective <= src_sol.objective + 1e-8 &&
                     src_sol.objective <= steady_sol.objective + 1e-8;
        bool widen = ok && wide_sol.objective <= drc_sol.objective + 1e-8;
        report(10, "cost dominance and box widening", order && widen,
               fmt("drc %.4f <= src %.4f <= steady %.4f; wide %.4f", drc_sol.objective,
                   src_sol.objective, steady_sol.objective, wide_sol.objective));
    }

    // --- 7: tracking guarantee -----------------------------------------------
    {
        Schedule sched = extract_schedule(drc_sp, drc_sol);
        RampSchedule rs1;
        rs1.delta = 1;
        rs1.rho_nom = 1.0;
        rs1.nu_per_hour = sched.nu[0];
        auto sim1 = simulate(m1, d1, rs1, 1e-3);
        double u_lo = 1e300, u_hi = -1e300;
        for (double u : sim1.u) {
            u_lo = std::min(u_lo, u);
            u_hi = std::max(u_hi, u);
        }
        RampSchedule rs2;
        rs2.delta = 2;
        rs2.rho_nom = 1.0;
        rs2.nu_per_hour = sched.nu[1];
        auto sim2 = simulate(m2, d2, rs2, 1e-3);
        bool pass = sim1.max_output_deviation <= 1e-6 && sim1.clips.empty() &&
                    u_lo >= 0.0 && u_hi <= 700.0 && sim2.max_output_deviation <= 1e-6 &&
                    sim2.clips.empty();
        report(7, "feedforward tracking", pass,
               fmt("dev %.1e / %.1e, clips %zu / %zu, u in [%.1f, %.1f]",
                   sim1.max_output_deviation, sim2.max_output_deviation,
                   sim1.clips.size(), sim2.clips.size(), u_lo, u_hi));
    }

    // --- 8: MILP vs exhaustive enumeration ------------------------------------
    {
        std::mt19937 rng(0xACCE);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        int compared = 0;
        double worst = 0.0, worst_viol = 0.0;
        bool status_ok = true;
        for (int trial = 0; trial < 50; ++trial) {
            int nb = 1 + static_cast<int>(rng() % 10);
            int n = nb + 2 + static_cast<int>(rng() % 4);
            int m = 3 + static_cast<int>(rng() % 6);
            MilpProblem p;
            for (int j = 0; j < n; ++j) {
                bool isbin = j < nb;
                p.add_var("x", isbin ? 0.0 : -2.0, isbin ? 1.0 : 2.0, u(rng));
                if (isbin) p.add_binary(j);
            }
            for (int i = 0; i < m; ++i) {
                auto& r = p.add_row(rng() % 2 ? RowSense::LE : RowSense::GE,
                                    1.5 * u(rng), "c");
                for (int j = 0; j < n; ++j)
                    if (rng() % 2) {
                        r.idx.push_back(j);
                        r.val.push_back(u(rng));
                    }
                if (r.idx.empty()) {
                    r.idx.push_back(0);
                    r.val.push_back(1.0);
                }
            }
            auto bf = brute_force(p);
            auto bb = solve_milp(p);
            if (bf.status != bb.status) status_ok = false;
            if (bf.status != SolveStatus::Optimal) continue;
            worst = std::max(worst, std::abs(bf.objective - bb.objective) /
                                        std::max(1.0, std::abs(bf.objective)));
            worst_viol = std::max(worst_viol, bb.max_violation);
            ++compared;
        }
        bool pass = status_ok && worst <= 1e-8 && worst_viol <= 1e-8 && compared >= 20;
        report(8, "branch and bound vs brute force", pass,
               fmt("%d compared, rel diff %.1e, viol %.1e", compared, worst, worst_viol));
    }

    // --- 9: discretization exactness ------------------------------------------
    {
        auto scheme = radau_scheme(4);
        std::mt19937 rng(0xD15C);
        std::uniform_real_distribution<double> u(-0.4, 0.4);
        double worst = 0.0;
        for (int delta : {1, 2}) {
            auto chain = discretize_chain(delta, 6, 2, scheme);
            std::vector<double> nu;
            for (int h = 0; h < 6; ++h) nu.push_back(u(rng));
            std::vector<double> phi0(delta, 0.0);
            phi0[0] = 1.0;
            auto nodes = chain.solve_nodes(nu, phi0);
            // closed-form values via the Taylor chain maps
            std::vector<double> start = phi0;
            std::size_t idx = 0;
            double stor = 1.5, cost = 0.0;
            std::vector<double> price{0.1, 0.3, 0.05, 0.2, 0.25, 0.15};
            auto rate_nodes = nodes[0];
            auto storage = chain.solve_integral([&] {
                std::vector<double> r(rate_nodes.size());
                for (std::size_t i = 0; i < r.size(); ++i) r[i] = rate_nodes[i] - 1.0;
                return r;
            }(), 1.5);
            std::vector<double> cost_rate(rate_nodes.size());
            for (std::size_t i = 0; i < rate_nodes.size(); ++i) {
                int h = std::min(5, static_cast<int>(chain.node_times[i] - 1e-12));
                cost_rate[i] = price[h] * rate_nodes[i];
            }
            auto phi_cost = chain.solve_integral(cost_rate, 0.0);
            for (int h = 0; h < 6; ++h) {
                for (int node = 0; node < 8; ++node, ++idx) {
                    double s = chain.node_times[idx] - h;
                    for (int mm = 0; mm < delta; ++mm) {
                        ChainMap map = chain_value(delta, mm, s);
                        double v = map.nu_coef * nu[h];
                        for (int j = 0; j < delta; ++j) v += map.phi_coef[j] * start[j];
                        worst = std::max(worst, std::abs(nodes[mm][idx] - v));
                    }
                    ChainMap im = chain_integral(delta, s);
                    double integ = im.nu_coef * nu[h];
                    for (int j = 0; j < delta; ++j) integ += im.phi_coef[j] * start[j];
                    worst = std::max(worst, std::abs(storage[idx] - (stor + integ - s)));
                    ChainMap i2 = chain_integral2(delta, s);
                    double integ2 = i2.nu_coef * nu[h];
                    for (int j = 0; j < delta; ++j) integ2 += i2.phi_coef[j] * start[j];
                    (void)integ2;
                    // cost: price_h * integral of rho over the hour so far
                    double cost_now = cost + price[h] * integ;
                    worst = std::max(worst, std::abs(phi_cost[idx] - cost_now));
                }
                ChainMap im = chain_integral(delta, 1.0);
                double integ = im.nu_coef * nu[h];
                for (int j = 0; j < delta; ++j) integ += im.phi_coef[j] * start[j];
                stor += integ - 1.0;
                cost += price[h] * integ;
                std::vector<double> next(delta);
                for (int mm = 0; mm < delta; ++mm) {
                    ChainMap map = chain_value(delta, mm, 1.0);
                    next[mm] = map.nu_coef * nu[h];
                    for (int j = 0; j < delta; ++j) next[mm] += map.phi_coef[j] * start[j];
                }
                start = next;
            }
        }
        report(9, "collocation exactness (K=4, E=2)", worst <= 1e-10,
               fmt("max node defect %.2e", worst));
    }

    std::printf("\n%d of 11 criteria passed\n", 11 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
