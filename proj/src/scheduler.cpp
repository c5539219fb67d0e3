#include "dynramp/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

namespace dynramp {

// ----------------------------------------------------------------------------
// Configuration I/O

void EnergySystemConfig::validate() const {
    if (components.empty()) throw ConfigError(name + ": system has no components");
    std::set<std::string> fs(forms.begin(), forms.end());
    if (!fs.count("electricity"))
        throw ConfigError(name + ": the form list must contain 'electricity'");
    for (const auto& c : components) {
        if (!(c.q_min >= 0.0 && c.q_min < c.q_max))
            throw ConfigError(name + ": component '" + c.name +
                              "' needs 0 <= q_min < q_max");
        if (c.conv_m <= 0.0)
            throw ConfigError(name + ": component '" + c.name + "' needs conv_m > 0");
        if (!fs.count(c.supplies))
            throw ConfigError(name + ": component '" + c.name + "' supplies unknown form '" +
                              c.supplies + "'");
    }
}

EnergySystemConfig EnergySystemConfig::from_kv(const KvTree& t) {
    if (t.get_or("kind", "") != "energy_system") throw ConfigError("not an energy_system file");
    EnergySystemConfig s;
    s.name = t.get("name");
    s.forms = t.get_strings("forms");
    s.grid_buy_limit = t.get_number("grid.buy_limit_kw");
    s.grid_sell_limit = t.get_number("grid.sell_limit_kw");
    std::vector<std::string> names;
    for (const auto& key : t.keys_with_prefix("component.")) {
        auto dot = key.find('.');
        if (dot == std::string::npos) continue;
        std::string cname = key.substr(0, dot);
        if (std::find(names.begin(), names.end(), cname) == names.end())
            names.push_back(cname);
    }
    for (const auto& cname : names) {
        Component c;
        c.name = cname;
        const std::string p = "component." + cname + ".";
        c.consumes = t.get(p + "consumes");
        c.supplies = t.get(p + "supplies");
        c.conv_m = t.get_number(p + "conv_m");
        c.conv_b = t.get_number(p + "conv_b");
        c.q_min = t.get_number(p + "q_min_kw");
        c.q_max = t.get_number(p + "q_max_kw");
        c.power_to_heat = t.get_number_or(p + "power_to_heat", 0.0);
        s.components.push_back(c);
    }
    s.validate();
    return s;
}

EnergySystemConfig EnergySystemConfig::load_file(const std::string& path) {
    return from_kv(KvTree::load_file(path));
}

KvTree EnergySystemConfig::to_kv() const {
    KvTree t;
    t.set_int("format_version", 1);
    t.set("kind", "energy_system");
    t.set("name", name);
    t.set_strings("forms", forms);
    t.set_number("grid.buy_limit_kw", grid_buy_limit);
    t.set_number("grid.sell_limit_kw", grid_sell_limit);
    for (const auto& c : components) {
        const std::string p = "component." + c.name + ".";
        t.set(p + "consumes", c.consumes);
        t.set(p + "supplies", c.supplies);
        t.set_number(p + "conv_m", c.conv_m);
        t.set_number(p + "conv_b", c.conv_b);
        t.set_number(p + "q_min_kw", c.q_min);
        t.set_number(p + "q_max_kw", c.q_max);
        t.set_number(p + "power_to_heat", c.power_to_heat);
    }
    return t;
}

PriceSeries PriceSeries::load_csv(const std::string& path) {
    CsvTable t = CsvTable::load_file(path);
    PriceSeries s;
    s.buy = t.column_values("buy");
    s.sell = t.column_values("sell");
    s.fuel = t.column_values("fuel");
    return s;
}

DemandSeries DemandSeries::load_csv(const std::string& path) {
    CsvTable t = CsvTable::load_file(path);
    DemandSeries s;
    s.heat = t.column_values("heat");
    s.electricity = t.column_values("electricity");
    return s;
}

void ProcessFlexConfig::validate() const {
    if (limits.delta != surrogate.delta)
        throw ConfigError(name + ": limit set (delta=" + std::to_string(limits.delta) +
                          ") and surrogate (delta=" + std::to_string(surrogate.delta) +
                          ") disagree");
    if (demand_scale < 0.0) throw ConfigError(name + ": demand_scale must be >= 0");
    if (storage_capacity_h <= 0.0) throw ConfigError(name + ": storage capacity must be > 0");
    if (storage_initial_frac < 0.0 || storage_initial_frac > 1.0)
        throw ConfigError(name + ": storage initial fraction must be in [0,1]");
}

ProcessFlexConfig ProcessFlexConfig::load_file(const std::string& path) {
    KvTree t = KvTree::load_file(path);
    if (t.get_or("kind", "") != "process_flex") throw ConfigError("not a process_flex file");
    ProcessFlexConfig c;
    c.name = t.get("name");
    auto dir = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& f) {
        std::filesystem::path p(f);
        return p.is_absolute() ? p.string() : (dir / p).string();
    };
    c.limits = AffineLimitSet::load_file(resolve(t.get("limits_file")));
    c.surrogate = DemandSurrogate::load_file(resolve(t.get("surrogate_file")));
    c.supplies = t.get_or("supplies", "heat");
    c.demand_scale = t.get_number("demand_scale");
    c.storage_capacity_h = t.get_number_or("storage.capacity_h", 3.0);
    c.storage_initial_frac = t.get_number_or("storage.initial_frac", 0.5);
    c.pin_terminal_storage = !t.has("storage.pin_terminal") || t.get_int("storage.pin_terminal") != 0;
    if (t.has("terminal_phi_pinned")) c.pin_terminal_phi = t.get_int("terminal_phi_pinned") != 0;
    if (t.has("src.lo")) c.src_lo = t.get_number("src.lo");
    if (t.has("src.hi")) c.src_hi = t.get_number("src.hi");
    c.validate();
    return c;
}

KvTree ProcessFlexConfig::to_kv() const {
    KvTree t;
    t.set_int("format_version", 1);
    t.set("kind", "process_flex");
    t.set("name", name);
    t.set("supplies", supplies);
    t.set_number("demand_scale", demand_scale);
    t.set_number("storage.capacity_h", storage_capacity_h);
    t.set_number("storage.initial_frac", storage_initial_frac);
    t.set_int("storage.pin_terminal", pin_terminal_storage ? 1 : 0);
    t.set_int("terminal_phi_pinned", pin_terminal_phi ? 1 : 0);
    if (src_lo) t.set_number("src.lo", *src_lo);
    if (src_hi) t.set_number("src.hi", *src_hi);
    return t;
}

// ----------------------------------------------------------------------------
// P2 builder

namespace {

// Affine expression over the per-process hourly nu variables.
struct NuAffine {
    std::vector<double> coef;  // one per hour
    double constant = 0.0;

    explicit NuAffine(int hours) : coef(hours, 0.0) {}
};

// Closed-form integrator-chain bookkeeping: phi at hour starts and node
// values / integrals within each hour, all affine in the nu vector.
class ChainTracker {
  public:
    ChainTracker(int delta, int hours, const std::vector<double>& phi0)
        : delta_(delta), hours_(hours) {
        // phi_start_[h][m]
        phi_start_.assign(hours + 1, std::vector<NuAffine>(std::max(delta, 1), NuAffine(hours)));
        for (int m = 0; m < delta; ++m) phi_start_[0][m].constant = phi0[m];
        for (int h = 0; h < hours; ++h) {
            for (int m = 0; m < delta; ++m) {
                ChainMap map = chain_value(delta, m, 1.0);
                NuAffine next(hours);
                for (int j = 0; j < delta; ++j) {
                    const NuAffine& src = phi_start_[h][j];
                    double c = map.phi_coef[j];
                    if (c == 0.0) continue;
                    next.constant += c * src.constant;
                    for (int k = 0; k < hours; ++k) next.coef[k] += c * src.coef[k];
                }
                next.coef[h] += map.nu_coef;
                phi_start_[h + 1][m] = std::move(next);
            }
        }
    }

    int delta() const { return delta_; }

    // rho^(m) at time (hour h, offset s in [0,1]).
    NuAffine value(int h, int m, double s) const {
        NuAffine out(hours_);
        if (delta_ == 0) {
            if (m == 0) out.coef[h] = 1.0;
            return out;
        }
        ChainMap map = chain_value(delta_, m, s);
        for (int j = 0; j < delta_; ++j) {
            const NuAffine& src = phi_start_[h][j];
            double c = map.phi_coef[j];
            if (c == 0.0) continue;
            out.constant += c * src.constant;
            for (int k = 0; k < hours_; ++k) out.coef[k] += c * src.coef[k];
        }
        out.coef[h] += map.nu_coef;
        return out;
    }

    // Integral of rho over [hour h, hour h + s].
    NuAffine integral(int h, double s) const {
        NuAffine out(hours_);
        if (delta_ == 0) {
            out.coef[h] = s;
            return out;
        }
        ChainMap map = chain_integral(delta_, s);
        for (int j = 0; j < delta_; ++j) {
            const NuAffine& src = phi_start_[h][j];
            double c = map.phi_coef[j];
            if (c == 0.0) continue;
            out.constant += c * src.constant;
            for (int k = 0; k < hours_; ++k) out.coef[k] += c * src.coef[k];
        }
        out.coef[h] += map.nu_coef;
        return out;
    }

    // Integral of rho over [0, hour h] (full hours).
    NuAffine integral_to(int h) const {
        NuAffine out(hours_);
        for (int k = 0; k < h; ++k) {
            NuAffine part = integral(k, 1.0);
            out.constant += part.constant;
            for (int j = 0; j < hours_; ++j) out.coef[j] += part.coef[j];
        }
        return out;
    }

  private:
    int delta_;
    int hours_;
    std::vector<std::vector<NuAffine>> phi_start_;
};

void add_affine_row(MilpProblem& p, const NuAffine& expr,
                    const std::vector<std::int32_t>& nu_vars, RowSense sense, double rhs,
                    const std::string& name, bool lazy) {
    SparseRow& r = p.add_row(sense, rhs - expr.constant, name, lazy);
    for (std::size_t h = 0; h < nu_vars.size(); ++h) {
        if (expr.coef[h] != 0.0) {
            r.idx.push_back(nu_vars[h]);
            r.val.push_back(expr.coef[h]);
        }
    }
}

ScheduleProblem build_common(const EnergySystemConfig& system,
                             const std::vector<ProcessFlexConfig>& processes,
                             const PriceSeries& prices, const DemandSeries& demands,
                             int H, BuildOptions options, RampingMode mode) {
    system.validate();
    for (const auto& pc : processes) pc.validate();
    options.mode = mode;
    if (static_cast<int>(prices.buy.size()) < H || static_cast<int>(prices.sell.size()) < H ||
        static_cast<int>(prices.fuel.size()) < H)
        throw ConfigError("price series shorter than the horizon");
    if (static_cast<int>(demands.heat.size()) < H ||
        static_cast<int>(demands.electricity.size()) < H)
        throw ConfigError("demand series shorter than the horizon");

    ScheduleProblem sp;
    sp.options = options;
    sp.horizon = H;
    sp.system = system;
    sp.processes = processes;
    sp.prices = prices;
    sp.demands = demands;
    sp.scheme = radau_scheme(options.collocation_points);
    for (int e = 0; e < options.elements_per_hour; ++e)
        for (int i = 0; i < sp.scheme.K; ++i)
            sp.node_offsets.push_back((e + sp.scheme.nodes[i]) / options.elements_per_hour);

    MilpProblem& p = sp.milp;
    p.name = "p2";

    const std::size_t P = processes.size();
    sp.nu.resize(P);
    for (std::size_t pi = 0; pi < P; ++pi) {
        const auto& pc = processes[pi];
        for (int h = 0; h < H; ++h) {
            double lo = -kInf, hi = kInf;
            if (mode == RampingMode::Steady) lo = hi = 0.0;
            if (mode == RampingMode::Static && pc.limits.delta <= 1) {
                lo = pc.src_lo.value_or(pc.limits.src_lo);
                hi = pc.src_hi.value_or(pc.limits.src_hi);
                if (!(lo <= hi))
                    throw ConfigError(pc.name + ": static ramping constants form an empty band");
            }
            if (pc.limits.delta == 0) {
                lo = std::max(lo, pc.limits.rho_min);
                hi = std::min(hi, pc.limits.rho_max);
                if (mode == RampingMode::Steady) lo = hi = pc.limits.rho_nom;
            }
            sp.nu[pi].push_back(
                p.add_var(pc.name + ".nu[" + std::to_string(h) + "]", lo, hi, 0.0));
        }
    }

    const std::size_t C = system.components.size();
    sp.q_in.resize(C);
    sp.q_out.resize(C);
    sp.z_on.resize(C);
    for (std::size_t ci = 0; ci < C; ++ci) {
        const auto& comp = system.components[ci];
        for (int h = 0; h < H; ++h) {
            std::string tag = comp.name + "[" + std::to_string(h) + "]";
            sp.q_out[ci].push_back(p.add_var("qout." + tag, 0.0, comp.q_max, 0.0));
            sp.q_in[ci].push_back(p.add_var("qin." + tag, 0.0, kInf, 0.0));
            std::int32_t z = p.add_var("z." + tag, 0.0, 1.0, 0.0);
            p.add_binary(z);
            sp.z_on[ci].push_back(z);
        }
    }
    for (int h = 0; h < H; ++h) {
        sp.grid_buy.push_back(
            p.add_var("grid.buy[" + std::to_string(h) + "]", 0.0, system.grid_buy_limit, 0.0));
        sp.grid_sell.push_back(p.add_var("grid.sell[" + std::to_string(h) + "]", 0.0,
                                         system.grid_sell_limit, 0.0));
    }
    for (int h = 0; h < H; ++h)
        sp.phi_cost.push_back(p.add_var("cost.cum[" + std::to_string(h) + "]", -kInf, kInf,
                                        h + 1 == H ? 1.0 : 0.0));

    // Process chains, ramping rows, storage, and hourly supply integrals.
    std::vector<std::vector<NuAffine>> e_wh(P);  // [process][hour] supply energy
    for (std::size_t pi = 0; pi < P; ++pi) {
        const auto& pc = processes[pi];
        const int delta = pc.limits.delta;
        std::vector<double> phi0(std::max(delta, 1), 0.0);
        if (delta >= 1) phi0[0] = pc.limits.rho_nom;
        ChainTracker chain(delta, H, phi0);

        const bool dyn_rows = !(mode == RampingMode::Static && delta <= 1) && delta >= 1;
        std::vector<double> enforce_offsets = sp.node_offsets;
        // The ramping bound also holds at the hour start, where nu_h begins to
        // act; Radau nodes exclude 0, so add it explicitly.
        enforce_offsets.insert(enforce_offsets.begin(), 0.0);
        for (int h = 0; h < H; ++h) {
            for (double s : enforce_offsets) {
                // Hour-boundary rows anchor the relaxation; interior node rows
                // are activated lazily by the solver when violated.
                const bool lazy_row = (s != 1.0 && s != 0.0);
                std::string tag = pc.name + "[" + std::to_string(h) + "," +
                                  KvTree::format_number(s) + "]";
                NuAffine rho = chain.value(h, 0, s);
                if (delta >= 1 && s != 0.0) {
                    // production-rate box at every node
                    add_affine_row(p, rho, sp.nu[pi], RowSense::LE, pc.limits.rho_max,
                                   "rho_ub." + tag, lazy_row);
                    add_affine_row(p, rho, sp.nu[pi], RowSense::GE, pc.limits.rho_min,
                                   "rho_lb." + tag, lazy_row);
                }
                for (int m = 1; m < delta; ++m) {
                    NuAffine dm = chain.value(h, m, s);
                    add_affine_row(p, dm, sp.nu[pi], RowSense::LE, pc.limits.box[m].hi,
                                   "phi" + std::to_string(m) + "_ub." + tag, lazy_row);
                    add_affine_row(p, dm, sp.nu[pi], RowSense::GE, pc.limits.box[m].lo,
                                   "phi" + std::to_string(m) + "_lb." + tag, lazy_row);
                }
                if (dyn_rows) {
                    // nu_h <= hi0 + sum_m hi_{m+1} rho^(m)(t), and the mirror.
                    NuAffine ub(H);
                    ub.coef[h] = 1.0;
                    NuAffine lb(H);
                    lb.coef[h] = 1.0;
                    for (int m = 0; m < delta; ++m) {
                        NuAffine dm = chain.value(h, m, s);
                        double chi = pc.limits.hi_coef[m + 1];
                        double clo = pc.limits.lo_coef[m + 1];
                        ub.constant -= chi * dm.constant;
                        lb.constant -= clo * dm.constant;
                        for (int k = 0; k < H; ++k) {
                            ub.coef[k] -= chi * dm.coef[k];
                            lb.coef[k] -= clo * dm.coef[k];
                        }
                    }
                    add_affine_row(p, ub, sp.nu[pi], RowSense::LE, pc.limits.hi_coef[0],
                                   "drc_ub." + tag, lazy_row);
                    add_affine_row(p, lb, sp.nu[pi], RowSense::GE, pc.limits.lo_coef[0],
                                   "drc_lb." + tag, lazy_row);
                }
            }
        }

        // Storage: S(t) = S0 + int rho - rho_nom * t, bounded in [0, capacity].
        const double cap = pc.storage_capacity_h * pc.limits.rho_nom;
        const double s0 = pc.storage_initial_frac * cap;
        for (int h = 0; h < H; ++h) {
            NuAffine upto = chain.integral_to(h);
            for (double s : sp.node_offsets) {
                NuAffine part = chain.integral(h, s);
                NuAffine stor(H);
                stor.constant = s0 + upto.constant + part.constant -
                                pc.limits.rho_nom * (h + s);
                for (int k = 0; k < H; ++k) stor.coef[k] = upto.coef[k] + part.coef[k];
                std::string tag = pc.name + "[" + std::to_string(h) + "," +
                                  KvTree::format_number(s) + "]";
                const bool lazy_row = (s != 1.0);
                add_affine_row(p, stor, sp.nu[pi], RowSense::LE, cap, "stor_ub." + tag,
                               lazy_row);
                add_affine_row(p, stor, sp.nu[pi], RowSense::GE, 0.0, "stor_lb." + tag,
                               lazy_row);
            }
        }
        if (pc.pin_terminal_storage) {
            NuAffine total = chain.integral_to(H);
            total.constant -= pc.limits.rho_nom * H;  // S(tf) - S0
            add_affine_row(p, total, sp.nu[pi], RowSense::EQ, 0.0,
                           pc.name + ".storage_terminal", false);
        }
        if (pc.pin_terminal_phi && delta >= 1) {
            for (int m = 0; m < delta; ++m) {
                NuAffine vm = chain.value(H - 1, m, 1.0);
                double target = (m == 0) ? pc.limits.rho_nom : 0.0;
                add_affine_row(p, vm, sp.nu[pi], RowSense::EQ, target,
                               pc.name + ".phi_terminal" + std::to_string(m), false);
            }
        }

        // Hourly supplied energy from the demand surrogate:
        // integral over the hour of a0 + sum_m a_{m+1} rho^(m)(t) + a_nu nu_h.
        for (int h = 0; h < H; ++h) {
            NuAffine hourly(H);
            hourly.constant = pc.surrogate.coef[0];
            hourly.coef[h] += pc.surrogate.coef.back();
            for (int m = 0; m < delta; ++m) {
                double a = pc.surrogate.coef[m + 1];
                if (a == 0.0) continue;
                // integral over the hour of rho^(m): difference of chain values
                // is awkward for m>0; integrate via chain maps directly.
                NuAffine integ(H);
                if (m == 0) {
                    integ = chain.integral(h, 1.0);
                } else {
                    // integral of rho^(m) over the hour = rho^(m-1)(h+1) - rho^(m-1)(h)
                    NuAffine hi_v = chain.value(h, m - 1, 1.0);
                    NuAffine lo_v = chain.value(h, m - 1, 0.0);
                    integ.constant = hi_v.constant - lo_v.constant;
                    for (int k = 0; k < H; ++k) integ.coef[k] = hi_v.coef[k] - lo_v.coef[k];
                }
                hourly.constant += a * integ.constant;
                for (int k = 0; k < H; ++k) hourly.coef[k] += a * integ.coef[k];
            }
            // scale to system units
            hourly.constant *= pc.demand_scale;
            for (int k = 0; k < H; ++k) hourly.coef[k] *= pc.demand_scale;
            e_wh[pi].push_back(hourly);
        }
    }

    // Component conversion and part-load rows.
    for (std::size_t ci = 0; ci < C; ++ci) {
        const auto& comp = system.components[ci];
        for (int h = 0; h < H; ++h) {
            std::string tag = comp.name + "[" + std::to_string(h) + "]";
            SparseRow& conv = p.add_row(RowSense::EQ, 0.0, "conv." + tag);
            conv.idx = {sp.q_out[ci][h], sp.q_in[ci][h], sp.z_on[ci][h]};
            conv.val = {1.0, -comp.conv_m, -comp.conv_b};
            SparseRow& pl_lo = p.add_row(RowSense::GE, 0.0, "minload." + tag);
            pl_lo.idx = {sp.q_out[ci][h], sp.z_on[ci][h]};
            pl_lo.val = {1.0, -comp.q_min};
            SparseRow& pl_hi = p.add_row(RowSense::LE, 0.0, "maxload." + tag);
            pl_hi.idx = {sp.q_out[ci][h], sp.z_on[ci][h]};
            pl_hi.val = {1.0, -comp.q_max};
        }
    }

    // Hourly energy balances for every form.
    for (const auto& form : system.forms) {
        for (int h = 0; h < H; ++h) {
            SparseRow& row = p.add_row(RowSense::EQ, 0.0,
                                       "balance." + form + "[" + std::to_string(h) + "]");
            double rhs = 0.0;
            if (form == "heat") rhs += demands.heat[h];
            if (form == "electricity") rhs += demands.electricity[h];
            for (std::size_t ci = 0; ci < C; ++ci) {
                const auto& comp = system.components[ci];
                if (comp.supplies == form) {
                    row.idx.push_back(sp.q_out[ci][h]);
                    row.val.push_back(1.0);
                }
                if (form == "electricity" && comp.power_to_heat > 0.0) {
                    row.idx.push_back(sp.q_out[ci][h]);
                    row.val.push_back(comp.power_to_heat);
                }
            }
            if (form == "electricity") {
                row.idx.push_back(sp.grid_buy[h]);
                row.val.push_back(1.0);
                row.idx.push_back(sp.grid_sell[h]);
                row.val.push_back(-1.0);
            }
            // process supplies
            double c0 = 0.0;
            std::vector<double> pc_coef;
            for (std::size_t pi = 0; pi < P; ++pi) {
                if (processes[pi].supplies != form) continue;
                const NuAffine& e = e_wh[pi][h];
                c0 += e.constant;
                for (int k = 0; k < H; ++k) {
                    if (e.coef[k] == 0.0) continue;
                    bool merged = false;
                    for (std::size_t q = 0; q < row.idx.size(); ++q)
                        if (row.idx[q] == sp.nu[pi][k]) {
                            row.val[q] += e.coef[k];
                            merged = true;
                            break;
                        }
                    if (!merged) {
                        row.idx.push_back(sp.nu[pi][k]);
                        row.val.push_back(e.coef[k]);
                    }
                }
            }
            row.rhs = rhs - c0;
        }
    }

    // Cumulative cost recursion.
    for (int h = 0; h < H; ++h) {
        SparseRow& row = p.add_row(RowSense::EQ, 0.0, "cost[" + std::to_string(h) + "]");
        row.idx.push_back(sp.phi_cost[h]);
        row.val.push_back(1.0);
        if (h > 0) {
            row.idx.push_back(sp.phi_cost[h - 1]);
            row.val.push_back(-1.0);
        }
        for (std::size_t ci = 0; ci < C; ++ci) {
            row.idx.push_back(sp.q_in[ci][h]);
            row.val.push_back(-prices.fuel[h]);
        }
        row.idx.push_back(sp.grid_buy[h]);
        row.val.push_back(-prices.buy[h]);
        row.idx.push_back(sp.grid_sell[h]);
        row.val.push_back(prices.sell[h]);
    }

    return sp;
}

}  // namespace

ScheduleProblem build_p2(const EnergySystemConfig& system,
                         const std::vector<ProcessFlexConfig>& processes,
                         const PriceSeries& prices, const DemandSeries& demands,
                         int horizon_hours, const BuildOptions& options) {
    return build_common(system, processes, prices, demands, horizon_hours, options,
                        RampingMode::Dynamic);
}

ScheduleProblem build_p2_src(const EnergySystemConfig& system,
                             const std::vector<ProcessFlexConfig>& processes,
                             const PriceSeries& prices, const DemandSeries& demands,
                             int horizon_hours, const BuildOptions& options) {
    return build_common(system, processes, prices, demands, horizon_hours, options,
                        RampingMode::Static);
}

ScheduleProblem build_steady_baseline(const EnergySystemConfig& system,
                                      const std::vector<ProcessFlexConfig>& processes,
                                      const PriceSeries& prices, const DemandSeries& demands,
                                      int horizon_hours, const BuildOptions& options) {
    return build_common(system, processes, prices, demands, horizon_hours, options,
                        RampingMode::Steady);
}

// ----------------------------------------------------------------------------
// Fastest ramp

FastRampResult build_fastest_ramp(const AffineLimitSet& limits, double rho_from, double rho_to,
                                  double step_hours, bool use_static_constants,
                                  std::optional<double> src_lo, std::optional<double> src_hi) {
    if (rho_from < limits.rho_min - 1e-12 || rho_from > limits.rho_max + 1e-12 ||
        rho_to < limits.rho_min - 1e-12 || rho_to > limits.rho_max + 1e-12)
        throw ConfigError("ramp endpoints must lie inside the production-rate box");
    const int delta = std::max(limits.delta, 1);

    FastRampResult out;
    out.step_hours = step_hours;
    if (std::abs(rho_to - rho_from) < 1e-14) {
        out.reachable = true;
        out.time_hours = 0.0;
        out.time_grid = {0.0};
        out.phi_at_grid.assign(delta, {rho_from});
        for (int m = 1; m < delta; ++m) out.phi_at_grid[m] = {0.0};
        return out;
    }

    const double c_lo = src_lo.value_or(limits.src_lo);
    const double c_hi = src_hi.value_or(limits.src_hi);

    auto feasible = [&](int steps, FastRampResult* traj) {
        MilpProblem p;
        p.name = "ramp";
        std::vector<std::int32_t> nu;
        for (int s = 0; s < steps; ++s) {
            double lo = -kInf, hi = kInf;
            if (use_static_constants) {
                lo = c_lo;
                hi = c_hi;
            }
            nu.push_back(p.add_var("nu[" + std::to_string(s) + "]", lo, hi, 0.0));
        }
        // phi at step boundaries: affine in nu with Taylor maps.
        std::vector<std::vector<NuAffine>> phi(steps + 1,
                                               std::vector<NuAffine>(delta, NuAffine(steps)));
        phi[0][0].constant = rho_from;
        for (int s = 0; s < steps; ++s) {
            for (int m = 0; m < delta; ++m) {
                ChainMap map = chain_value(delta, m, step_hours);
                NuAffine next(steps);
                for (int j = 0; j < delta; ++j) {
                    double c = map.phi_coef[j];
                    if (c == 0.0) continue;
                    next.constant += c * phi[s][j].constant;
                    for (int k = 0; k < steps; ++k) next.coef[k] += c * phi[s][j].coef[k];
                }
                next.coef[s] += map.nu_coef;
                phi[s + 1][m] = std::move(next);
            }
        }
        for (int s = 1; s <= steps; ++s) {
            std::string tag = std::to_string(s);
            add_affine_row(p, phi[s][0], nu, RowSense::LE, limits.rho_max, "rho_ub." + tag,
                           true);
            add_affine_row(p, phi[s][0], nu, RowSense::GE, limits.rho_min, "rho_lb." + tag,
                           true);
            for (int m = 1; m < delta; ++m) {
                add_affine_row(p, phi[s][m], nu, RowSense::LE, limits.box[m].hi,
                               "box" + std::to_string(m) + "_ub." + tag, true);
                add_affine_row(p, phi[s][m], nu, RowSense::GE, limits.box[m].lo,
                               "box" + std::to_string(m) + "_lb." + tag, true);
            }
            if (!use_static_constants) {
                // Dynamic rows at both boundaries of each step.
                for (int end = s - 1; end <= s; ++end) {
                    NuAffine ub(steps);
                    ub.coef[s - 1] = 1.0;
                    NuAffine lb(steps);
                    lb.coef[s - 1] = 1.0;
                    for (int m = 0; m < delta; ++m) {
                        const NuAffine& dm = phi[end][m];
                        double chi = limits.hi_coef[m + 1];
                        double clo = limits.lo_coef[m + 1];
                        ub.constant -= chi * dm.constant;
                        lb.constant -= clo * dm.constant;
                        for (int k = 0; k < steps; ++k) {
                            ub.coef[k] -= chi * dm.coef[k];
                            lb.coef[k] -= clo * dm.coef[k];
                        }
                    }
                    add_affine_row(p, ub, nu, RowSense::LE, limits.hi_coef[0],
                                   "drc_ub." + tag + "." + std::to_string(end), true);
                    add_affine_row(p, lb, nu, RowSense::GE, limits.lo_coef[0],
                                   "drc_lb." + tag + "." + std::to_string(end), true);
                }
            }
        }
        // Terminal settle condition.
        add_affine_row(p, phi[steps][0], nu, RowSense::EQ, rho_to, "terminal_rho", false);
        for (int m = 1; m < delta; ++m)
            add_affine_row(p, phi[steps][m], nu, RowSense::EQ, 0.0,
                           "terminal_phi" + std::to_string(m), false);

        MilpSolution sol = solve_lp(p);
        if (sol.status != SolveStatus::Optimal) return false;
        if (traj) {
            traj->nu_per_step.assign(sol.x.begin(), sol.x.begin() + steps);
            traj->time_grid.clear();
            traj->phi_at_grid.assign(delta, {});
            for (int s = 0; s <= steps; ++s) {
                traj->time_grid.push_back(s * step_hours);
                for (int m = 0; m < delta; ++m) {
                    double v = phi[s][m].constant;
                    for (int k = 0; k < steps; ++k) v += phi[s][m].coef[k] * sol.x[k];
                    traj->phi_at_grid[m].push_back(v);
                }
            }
        }
        return true;
    };

    // Find an upper bound by doubling, then bisect to the minimal step count.
    int hi = 8;
    const int cap = 60000;
    while (!feasible(hi, nullptr)) {
        hi *= 2;
        if (hi > cap) throw InfeasibleSchedule("ramp target unreachable within " +
                                               std::to_string(cap * step_hours) + " h");
    }
    int lo = 0;
    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        if (feasible(mid, nullptr)) hi = mid;
        else lo = mid;
    }
    out.reachable = true;
    out.time_hours = hi * step_hours;
    feasible(hi, &out);
    return out;
}

// ----------------------------------------------------------------------------
// Schedule extraction

Schedule extract_schedule(const ScheduleProblem& sp, const MilpSolution& sol) {
    if (!sol.feasible() || sol.x.size() != static_cast<std::size_t>(sp.milp.num_vars()))
        throw LpError("solution does not match the problem (stale pairing?)");
    const int H = sp.horizon;
    const std::size_t P = sp.processes.size();
    const std::size_t C = sp.system.components.size();

    Schedule s;
    s.horizon = H;
    s.objective = sol.objective;
    s.solver_gap = sol.gap;
    s.solver_nodes = sol.node_count;

    s.nu.resize(P);
    s.e_wh.resize(P);
    s.phi_nodes.resize(P);
    s.storage_nodes.resize(P);
    for (int h = 0; h < H; ++h)
        for (double off : sp.node_offsets) s.node_times.push_back(h + off);

    for (std::size_t pi = 0; pi < P; ++pi) {
        const auto& pc = sp.processes[pi];
        const int delta = pc.limits.delta;
        for (int h = 0; h < H; ++h) s.nu[pi].push_back(sol.x[sp.nu[pi][h]]);

        // Reconstruct phi and storage on the node grid via the chain maps.
        const int dim = std::max(delta, 1);
        s.phi_nodes[pi].assign(dim, {});
        std::vector<double> phi_start(dim, 0.0);
        if (delta >= 1) phi_start[0] = pc.limits.rho_nom;
        double cap = pc.storage_capacity_h * pc.limits.rho_nom;
        double stor = pc.storage_initial_frac * cap;
        for (int h = 0; h < H; ++h) {
            double nu_h = s.nu[pi][h];
            for (double off : sp.node_offsets) {
                for (int m = 0; m < dim; ++m) {
                    ChainMap map = chain_value(delta, m, off);
                    double v = map.nu_coef * nu_h;
                    for (int j = 0; j < delta; ++j) v += map.phi_coef[j] * phi_start[j];
                    s.phi_nodes[pi][m].push_back(v);
                }
                ChainMap imap = chain_integral(delta, off);
                double integ = imap.nu_coef * nu_h;
                for (int j = 0; j < delta; ++j) integ += imap.phi_coef[j] * phi_start[j];
                s.storage_nodes[pi].push_back(stor + integ - pc.limits.rho_nom * off);
            }
            // advance to the next hour start
            ChainMap imap = chain_integral(delta, 1.0);
            double integ = imap.nu_coef * nu_h;
            for (int j = 0; j < delta; ++j) integ += imap.phi_coef[j] * phi_start[j];
            stor += integ - pc.limits.rho_nom;
            std::vector<double> next(dim, 0.0);
            for (int m = 0; m < dim; ++m) {
                ChainMap map = chain_value(delta, m, 1.0);
                next[m] = map.nu_coef * nu_h;
                for (int j = 0; j < delta; ++j) next[m] += map.phi_coef[j] * phi_start[j];
            }
            phi_start = next;
        }

        // Scheduled hourly supply energy from the surrogate.
        std::vector<double> start2(dim, 0.0);
        if (delta >= 1) start2[0] = pc.limits.rho_nom;
        for (int h = 0; h < H; ++h) {
            double nu_h = s.nu[pi][h];
            double e = pc.surrogate.coef[0] + pc.surrogate.coef.back() * nu_h;
            for (int m = 0; m < delta; ++m) {
                double integ;
                if (m == 0) {
                    ChainMap imap = chain_integral(delta, 1.0);
                    integ = imap.nu_coef * nu_h;
                    for (int j = 0; j < delta; ++j) integ += imap.phi_coef[j] * start2[j];
                } else {
                    ChainMap v1 = chain_value(delta, m - 1, 1.0);
                    integ = v1.nu_coef * nu_h;
                    for (int j = 0; j < delta; ++j) integ += v1.phi_coef[j] * start2[j];
                    integ -= start2[m - 1];
                }
                e += pc.surrogate.coef[m + 1] * integ;
            }
            s.e_wh[pi].push_back(pc.demand_scale * e);
            std::vector<double> next(dim, 0.0);
            for (int m = 0; m < dim; ++m) {
                ChainMap map = chain_value(delta, m, 1.0);
                next[m] = map.nu_coef * nu_h;
                for (int j = 0; j < delta; ++j) next[m] += map.phi_coef[j] * start2[j];
            }
            start2 = next;
        }
    }

    for (std::size_t ci = 0; ci < C; ++ci) {
        s.q_in.emplace_back();
        s.q_out.emplace_back();
        s.z_on.emplace_back();
        for (int h = 0; h < H; ++h) {
            s.q_in[ci].push_back(sol.x[sp.q_in[ci][h]]);
            s.q_out[ci].push_back(sol.x[sp.q_out[ci][h]]);
            double z = sol.x[sp.z_on[ci][h]];
            if (std::abs(z - std::round(z)) > 1e-9)
                throw LpError("binary '" + sp.milp.var_names[sp.z_on[ci][h]] +
                              "' is not integral in the solution");
            s.z_on[ci].push_back(std::round(z));
        }
    }
    for (int h = 0; h < H; ++h) {
        s.grid_buy.push_back(sol.x[sp.grid_buy[h]]);
        s.grid_sell.push_back(sol.x[sp.grid_sell[h]]);
        double cost = 0.0;
        for (std::size_t ci = 0; ci < C; ++ci) cost += sp.prices.fuel[h] * s.q_in[ci][h];
        cost += sp.prices.buy[h] * s.grid_buy[h] - sp.prices.sell[h] * s.grid_sell[h];
        s.hourly_cost.push_back(cost);
        s.cumulative_cost.push_back((h ? s.cumulative_cost[h - 1] : 0.0) + cost);
    }

    // Re-verify the energy balances hour by hour.
    for (int h = 0; h < H; ++h) {
        for (const auto& form : sp.system.forms) {
            double lhs = 0.0, rhs = 0.0;
            if (form == "heat") rhs += sp.demands.heat[h];
            if (form == "electricity") rhs += sp.demands.electricity[h];
            for (std::size_t ci = 0; ci < C; ++ci) {
                const auto& comp = sp.system.components[ci];
                if (comp.supplies == form) lhs += s.q_out[ci][h];
                if (form == "electricity" && comp.power_to_heat > 0.0)
                    lhs += comp.power_to_heat * s.q_out[ci][h];
            }
            if (form == "electricity") lhs += s.grid_buy[h] - s.grid_sell[h];
            for (std::size_t pi = 0; pi < P; ++pi)
                if (sp.processes[pi].supplies == form) lhs += s.e_wh[pi][h];
            if (std::abs(lhs - rhs) > 1e-8)
                throw LpError("energy balance for '" + form + "' violated at hour " +
                              std::to_string(h) + " by " + std::to_string(lhs - rhs));
        }
    }
    return s;
}

void Schedule::save_csv(const std::string& dir, const EnergySystemConfig& system,
                        const std::vector<ProcessFlexConfig>& processes) const {
    std::filesystem::create_directories(dir);
    {
        CsvWriter w(dir + "/schedule_nodes.csv");
        std::vector<std::string> head{"time_h"};
        for (std::size_t pi = 0; pi < processes.size(); ++pi) {
            const auto& pc = processes[pi];
            for (std::size_t m = 0; m < phi_nodes[pi].size(); ++m)
                head.push_back(pc.name + (m == 0 ? ".rho" : ".rho_d" + std::to_string(m)));
            head.push_back(pc.name + ".nu");
            head.push_back(pc.name + ".storage");
        }
        for (const auto& c : system.components) {
            head.push_back(c.name + ".q_in");
            head.push_back(c.name + ".q_out");
            head.push_back(c.name + ".z");
        }
        head.push_back("grid_buy");
        head.push_back("grid_sell");
        head.push_back("cumulative_cost");
        w.write_header(head);
        const std::size_t nodes_per_hour = node_times.size() / horizon;
        for (std::size_t i = 0; i < node_times.size(); ++i) {
            int h = std::min<int>(horizon - 1, static_cast<int>(i / nodes_per_hour));
            std::vector<double> row{node_times[i]};
            for (std::size_t pi = 0; pi < processes.size(); ++pi) {
                for (std::size_t m = 0; m < phi_nodes[pi].size(); ++m)
                    row.push_back(phi_nodes[pi][m][i]);
                row.push_back(nu[pi][h]);
                row.push_back(storage_nodes[pi][i]);
            }
            for (std::size_t ci = 0; ci < system.components.size(); ++ci) {
                row.push_back(q_in[ci][h]);
                row.push_back(q_out[ci][h]);
                row.push_back(z_on[ci][h]);
            }
            row.push_back(grid_buy[h]);
            row.push_back(grid_sell[h]);
            double frac = node_times[i] - h;
            row.push_back((h ? cumulative_cost[h - 1] : 0.0) + hourly_cost[h] * frac);
            w.write_row(row);
        }
        w.close();
    }
    {
        CsvWriter w(dir + "/schedule_hourly.csv");
        std::vector<std::string> head{"hour"};
        for (const auto& pc : processes) {
            head.push_back(pc.name + ".nu");
            head.push_back(pc.name + ".supply_kwh");
        }
        for (const auto& c : system.components) {
            head.push_back(c.name + ".q_in");
            head.push_back(c.name + ".q_out");
            head.push_back(c.name + ".z");
        }
        head.push_back("grid_buy");
        head.push_back("grid_sell");
        head.push_back("cost");
        head.push_back("cumulative_cost");
        w.write_header(head);
        for (int h = 0; h < horizon; ++h) {
            std::vector<double> row{static_cast<double>(h)};
            for (std::size_t pi = 0; pi < processes.size(); ++pi) {
                row.push_back(nu[pi][h]);
                row.push_back(e_wh[pi][h]);
            }
            for (std::size_t ci = 0; ci < system.components.size(); ++ci) {
                row.push_back(q_in[ci][h]);
                row.push_back(q_out[ci][h]);
                row.push_back(z_on[ci][h]);
            }
            row.push_back(grid_buy[h]);
            row.push_back(grid_sell[h]);
            row.push_back(hourly_cost[h]);
            row.push_back(cumulative_cost[h]);
            w.write_row(row);
        }
        w.close();
    }
}

}  // namespace dynramp
