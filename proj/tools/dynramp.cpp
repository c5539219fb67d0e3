// Command-line surface for the ramping toolkit: derive ramping constraints
// from a process model, fit conservative limits and demand surrogates, solve
// fastest-ramp and scheduling problems, and verify schedules by simulation.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dynramp/limitfit.hpp"
#include "dynramp/linearize.hpp"
#include "dynramp/scheduler.hpp"
#include "dynramp/simulate.hpp"

using namespace dynramp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitRuntime = 4;

std::vector<int> parse_grid(const std::string& s) {
    std::vector<int> out;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stoi(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

std::vector<VariableRange> phi_box_of(const RampingDerivation& d) {
    std::vector<VariableRange> box;
    for (int m = 0; m < d.delta; ++m) {
        if (m == 0) {
            box.push_back({d.model.rho_min, d.model.rho_max});
        } else {
            auto it = d.model.ranges.find(rate_derivative_name(m));
            if (it == d.model.ranges.end())
                throw ConfigError(d.model.name + ": model file must declare range." +
                                  rate_derivative_name(m) + " for the fitting box");
            box.push_back(it->second);
        }
    }
    return box;
}

int cmd_derive(const std::string& model_path, const std::string& out_path,
               const std::string& report_path) {
    ProcessModel m = ProcessModel::load_file(model_path);
    RampingDerivation d = derive(m);
    d.save_file(out_path);
    std::string rep = d.report();
    if (!report_path.empty()) {
        std::ofstream f(report_path);
        f << rep;
    }
    std::printf("%s", rep.c_str());
    std::printf("r=%d, delta=%d, det(J) at nominal = %s (%s)\n", d.relative_degree, d.delta,
                KvTree::format_number(d.det_at_nominal).c_str(),
                std::abs(d.det_at_nominal) > 1e-12 ? "nonzero" : "ZERO");
    return kExitOk;
}

int cmd_fit(const std::string& deriv_path, const std::string& grid,
            const std::string& out_path, const std::string& samples_csv) {
    RampingDerivation d = RampingDerivation::load_file(deriv_path);
    std::vector<int> counts = parse_grid(grid);
    if (d.delta >= 1 && counts.size() == 1)
        counts.assign(static_cast<std::size_t>(d.delta), counts[0]);
    if (static_cast<int>(counts.size()) != d.delta)
        throw FitError("grid needs " + std::to_string(d.delta) + " counts for delta = " +
                       std::to_string(d.delta));
    auto box = phi_box_of(d);
    if (!samples_csv.empty()) sample_limits(d, box, counts).save_csv(samples_csv);
    AffineLimitSet s = fit_limit_set(d, box, counts);
    s.save_file(out_path);
    std::size_t total = 1;
    for (int c : counts) total *= static_cast<std::size_t>(c);
    std::printf("fitted conservative limits over %zu samples\n", total);
    std::printf("  nu_max coef:");
    for (double c : s.hi_coef) std::printf(" %s", KvTree::format_number(c).c_str());
    std::printf("  (pre-shift max violation %s)\n", KvTree::format_number(s.shift_hi).c_str());
    std::printf("  nu_min coef:");
    for (double c : s.lo_coef) std::printf(" %s", KvTree::format_number(c).c_str());
    std::printf("  (pre-shift max violation %s)\n", KvTree::format_number(s.shift_lo).c_str());
    std::printf("  static constants (fitted band extremes): [%s, %s]\n",
                KvTree::format_number(s.src_lo).c_str(),
                KvTree::format_number(s.src_hi).c_str());
    return kExitOk;
}

int cmd_fit_demand(const std::string& deriv_path, const std::string& limits_path,
                   const std::string& grid, const std::string& out_path) {
    RampingDerivation d = RampingDerivation::load_file(deriv_path);
    AffineLimitSet limits = AffineLimitSet::load_file(limits_path);
    std::vector<int> counts = parse_grid(grid);
    if (counts.size() == 1) counts.assign(static_cast<std::size_t>(d.delta) + 1, counts[0]);
    if (static_cast<int>(counts.size()) != d.delta + 1)
        throw FitError("grid needs " + std::to_string(d.delta + 1) +
                       " counts (phi axes plus nu)");
    auto box = phi_box_of(d);
    DemandSurrogate s = fit_demand(d, limits, box, counts);
    s.save_file(out_path);
    std::printf("demand surrogate over %zu grid points (%zu inside the exact limits)\n",
                s.rows_total, s.rows_kept);
    std::printf("  coefficients:");
    for (double c : s.coef) std::printf(" %s", KvTree::format_number(c).c_str());
    std::printf("\n  avg abs deviation = %s = %.2f%% of nominal demand\n",
                KvTree::format_number(s.avg_abs_deviation).c_str(),
                100.0 * s.deviation_fraction());
    return kExitOk;
}

int cmd_ramp(const std::string& limits_path, double from, double to, bool use_static,
             double step, const std::string& out_csv) {
    AffineLimitSet limits = AffineLimitSet::load_file(limits_path);
    auto t0 = std::chrono::steady_clock::now();
    FastRampResult r = build_fastest_ramp(limits, from, to, step, use_static);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    std::printf("fastest ramp %s -> %s: %.2f h (%s limits, %lld ms)\n",
                KvTree::format_number(from).c_str(), KvTree::format_number(to).c_str(),
                r.time_hours, use_static ? "static" : "dynamic",
                static_cast<long long>(ms));
    if (!out_csv.empty()) {
        CsvWriter w(out_csv);
        std::vector<std::string> head{"time_h"};
        for (std::size_t m = 0; m < r.phi_at_grid.size(); ++m)
            head.push_back(m == 0 ? "rho" : "rho_d" + std::to_string(m));
        head.push_back("nu");
        w.write_header(head);
        for (std::size_t i = 0; i < r.time_grid.size(); ++i) {
            std::vector<double> row{r.time_grid[i]};
            for (const auto& series : r.phi_at_grid) row.push_back(series[i]);
            row.push_back(i < r.nu_per_step.size() ? r.nu_per_step[i] : 0.0);
            w.write_row(row);
        }
        w.close();
    }
    return kExitOk;
}

int cmd_schedule(const std::string& system_path, const std::string& prices_path,
                 const std::string& demands_path, const std::vector<std::string>& process_paths,
                 bool use_src, bool use_steady, bool compare_steady, double gap,
                 const std::string& out_dir) {
    EnergySystemConfig system = EnergySystemConfig::load_file(system_path);
    PriceSeries prices = PriceSeries::load_csv(prices_path);
    DemandSeries demands = DemandSeries::load_csv(demands_path);
    std::vector<ProcessFlexConfig> processes;
    for (const auto& p : process_paths) processes.push_back(ProcessFlexConfig::load_file(p));
    const int H = static_cast<int>(std::min(prices.buy.size(), demands.heat.size()));

    BuildOptions opts;
    ScheduleProblem sp =
        use_steady ? build_steady_baseline(system, processes, prices, demands, H, opts)
        : use_src  ? build_p2_src(system, processes, prices, demands, H, opts)
                   : build_p2(system, processes, prices, demands, H, opts);

    SolverOptions sopt;
    sopt.gap_tol = gap;
    auto t0 = std::chrono::steady_clock::now();
    MilpSolution sol = solve_milp(sp.milp, sopt);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream log(out_dir + "/solver.log");
        log << "problem: " << sp.milp.num_vars() << " variables, " << sp.milp.rows.size()
            << " rows, " << sp.milp.binaries.size() << " binaries\n";
        log << "status: " << to_string(sol.status) << "\n";
        log << "objective: " << KvTree::format_number(sol.objective) << "\n";
        log << "best bound: " << KvTree::format_number(sol.best_bound) << "\n";
        log << "relative gap: " << KvTree::format_number(sol.gap) << "\n";
        log << "nodes: " << sol.node_count << "\n";
        log << "simplex iterations: " << sol.simplex_iterations << "\n";
        log << "wall time ms: " << ms << "\n";
    }
    if (sol.status == SolveStatus::Infeasible) {
        std::fprintf(stderr, "schedule infeasible: no dispatch satisfies the energy balance "
                             "rows under the configured bounds\n");
        return kExitInfeasible;
    }
    if (!sol.feasible()) {
        std::fprintf(stderr, "solver failure: %s\n", to_string(sol.status).c_str());
        return kExitRuntime;
    }
    Schedule sched = extract_schedule(sp, sol);
    sched.save_csv(out_dir, system, processes);
    save_lp_file(sp.milp, out_dir + "/problem.lp.txt");

    std::ofstream summary(out_dir + "/cost_summary.txt");
    summary << "mode: " << (use_steady ? "steady" : (use_src ? "src" : "drc")) << "\n";
    summary << "objective (energy cost): " << KvTree::format_number(sol.objective) << "\n";
    if (compare_steady && !use_steady) {
        ScheduleProblem base = build_steady_baseline(system, processes, prices, demands, H, opts);
        MilpSolution bsol = solve_milp(base.milp, sopt);
        if (bsol.feasible()) {
            summary << "steady baseline cost: " << KvTree::format_number(bsol.objective)
                    << "\n";
            summary << "cost reduction vs steady: "
                    << KvTree::format_number(bsol.objective - sol.objective) << "\n";
        } else {
            summary << "steady baseline: " << to_string(bsol.status) << "\n";
        }
    }
    std::printf("status %s, objective %s, gap %s, %ld nodes, %lld ms -> %s\n",
                to_string(sol.status).c_str(), KvTree::format_number(sol.objective).c_str(),
                KvTree::format_number(sol.gap).c_str(), sol.node_count,
                static_cast<long long>(ms), out_dir.c_str());
    return kExitOk;
}

int cmd_simulate(const std::string& model_path, const std::string& deriv_path,
                 const std::string& schedule_dir, double dt, double max_dev,
                 const std::string& out_dir) {
    ProcessModel model = ProcessModel::load_file(model_path);
    RampingDerivation d = RampingDerivation::load_file(deriv_path);

    CsvTable hourly = CsvTable::load_file(schedule_dir + "/schedule_hourly.csv");
    RampSchedule sched;
    sched.delta = d.delta;
    sched.rho_nom = model.rho_nom;
    sched.nu_per_hour = hourly.column_values(model.name + ".nu");

    SimResult res = simulate(model, d, sched, dt);

    std::filesystem::create_directories(out_dir);
    res.save_csv(out_dir + "/simulation.csv", model.states);
    std::ofstream rep(out_dir + "/simulation_report.txt");
    rep << "model: " << model.name << "\n";
    rep << "dt: " << KvTree::format_number(dt) << " h\n";
    rep << "max |y - y_nom|: " << KvTree::format_number(res.max_output_deviation) << "\n";
    rep << "clip events: " << res.clips.size() << "\n";
    for (const auto& c : res.clips)
        rep << "  t=" << c.time << " u_raw=" << c.u_raw << " clipped to " << c.u_clipped
            << "\n";
    std::printf("max |y - y_nom| = %s, %zu clip events\n",
                KvTree::format_number(res.max_output_deviation).c_str(), res.clips.size());
    bool ok = res.clips.empty() && res.max_output_deviation <= max_dev;
    return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic ramping toolkit"};
    app.require_subcommand(1);

    std::string model_path, out_path, report_path, deriv_path, grid, limits_path, samples_csv;
    std::string system_path, prices_path, demands_path, schedule_dir, out_dir;
    std::vector<std::string> process_paths;
    double from = 0.8, to = 1.2, step = 0.01, gap = 0.0, dt = 1e-3, max_dev = 1e-6;
    bool use_static = false, use_src = false, use_steady = false, compare_steady = false;

    auto* derive_cmd = app.add_subcommand("derive", "derive ramping constraints from a model");
    derive_cmd->add_option("--model", model_path)->required();
    derive_cmd->add_option("--out", out_path)->required();
    derive_cmd->add_option("--report", report_path);

    auto* fit_cmd = app.add_subcommand("fit", "fit conservative affine ramping limits");
    fit_cmd->add_option("--derivation", deriv_path)->required();
    fit_cmd->add_option("--grid", grid)->default_val("100");
    fit_cmd->add_option("--out", out_path)->required();
    fit_cmd->add_option("--samples-csv", samples_csv);

    auto* fitd_cmd = app.add_subcommand("fit-demand", "fit the affine demand surrogate");
    fitd_cmd->add_option("--derivation", deriv_path)->required();
    fitd_cmd->add_option("--limits", limits_path)->required();
    fitd_cmd->add_option("--grid", grid)->default_val("11");
    fitd_cmd->add_option("--out", out_path)->required();

    auto* ramp_cmd = app.add_subcommand("ramp", "fastest production-rate ramp");
    ramp_cmd->add_option("--limits", limits_path)->required();
    ramp_cmd->add_option("--from", from)->required();
    ramp_cmd->add_option("--to", to)->required();
    ramp_cmd->add_flag("--static", use_static, "use static ramping constants");
    ramp_cmd->add_option("--step", step);
    ramp_cmd->add_option("--out", out_path);

    auto* sched_cmd = app.add_subcommand("schedule", "solve the scheduling MILP");
    sched_cmd->add_option("--system", system_path)->required();
    sched_cmd->add_option("--prices", prices_path)->required();
    sched_cmd->add_option("--demands", demands_path)->required();
    sched_cmd->add_option("--process", process_paths)->required();
    sched_cmd->add_flag("--src", use_src, "static ramping constraints");
    sched_cmd->add_flag("--steady", use_steady, "steady-state baseline");
    sched_cmd->add_flag("--compare-steady", compare_steady);
    sched_cmd->add_option("--gap", gap);
    sched_cmd->add_option("--out", out_dir)->required();

    auto* sim_cmd = app.add_subcommand("simulate", "verify a schedule on the nonlinear model");
    sim_cmd->add_option("--model", model_path)->required();
    sim_cmd->add_option("--derivation", deriv_path)->required();
    sim_cmd->add_option("--schedule", schedule_dir)->required();
    sim_cmd->add_option("--dt", dt);
    sim_cmd->add_option("--max-deviation", max_dev);
    sim_cmd->add_option("--out", out_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (derive_cmd->parsed()) return cmd_derive(model_path, out_path, report_path);
        if (fit_cmd->parsed()) return cmd_fit(deriv_path, grid, out_path, samples_csv);
        if (fitd_cmd->parsed()) return cmd_fit_demand(deriv_path, limits_path, grid, out_path);
        if (ramp_cmd->parsed()) return cmd_ramp(limits_path, from, to, use_static, step, out_path);
        if (sched_cmd->parsed())
            return cmd_schedule(system_path, prices_path, demands_path, process_paths, use_src,
                                use_steady, compare_steady, gap, out_dir);
        if (sim_cmd->parsed())
            return cmd_simulate(model_path, deriv_path, schedule_dir, dt, max_dev, out_dir);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const ModelError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const KvError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const CsvError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const RelativeDegreeMismatch& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const DegenerateOutput& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const FitError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const InfeasibleSchedule& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitOk;
}
