#include "dynramp/limitfit.hpp"

#include <cmath>

#include "dynramp/csv.hpp"

namespace dynramp {

namespace {

// Row-major walk over a Cartesian grid, last axis fastest.
class GridWalker {
  public:
    GridWalker(const std::vector<VariableRange>& box, const std::vector<int>& counts)
        : box_(box), counts_(counts), idx_(counts.size(), 0) {}

    bool next(std::vector<double>& point) {
        if (done_) return false;
        point.resize(counts_.size());
        for (std::size_t a = 0; a < counts_.size(); ++a) {
            const auto& r = box_[a];
            point[a] = counts_[a] == 1
                           ? r.lo
                           : r.lo + (r.hi - r.lo) * idx_[a] / (counts_[a] - 1);
        }
        for (std::size_t a = counts_.size(); a-- > 0;) {
            if (++idx_[a] < counts_[a]) return true;
            idx_[a] = 0;
            if (a == 0) done_ = true;
        }
        if (counts_.empty()) done_ = true;
        return true;
    }

  private:
    std::vector<VariableRange> box_;
    std::vector<int> counts_;
    std::vector<int> idx_;
    bool done_ = false;
};

std::size_t grid_size(const std::vector<int>& counts) {
    std::size_t n = 1;
    for (int c : counts) n *= static_cast<std::size_t>(c);
    return n;
}

}  // namespace

LimitSampleTable sample_limits(const RampingDerivation& d,
                               const std::vector<VariableRange>& box,
                               const std::vector<int>& counts) {
    if (box.size() != d.phi_names.size() || counts.size() != d.phi_names.size())
        throw FitError("box/counts dimension must match the ramping order delta = " +
                       std::to_string(d.delta));
    for (int c : counts)
        if (c < 2) throw FitError("need at least 2 grid points per axis");

    LimitSampleTable t;
    t.phi_names = d.phi_names;
    t.box = box;
    t.counts = counts;

    GridWalker walk(box, counts);
    std::vector<double> point;
    std::vector<double> warm;
    for (const auto& s : d.model.states) warm.push_back(d.model.nominal_state.at(s));
    while (walk.next(point)) {
        RampingState phi{point};
        try {
            std::vector<double> x;
            try {
                x = d.solve_gamma(phi, warm);
            } catch (const NoConvergence&) {
                x = d.solve_gamma(phi);  // retry from the nominal guess
            }
            NuLimits lim = d.nu_limits_exact(phi, x);
            warm = x;
            t.phi.push_back(point);
            t.nu_min.push_back(lim.nu_min);
            t.nu_max.push_back(lim.nu_max);
        } catch (const DerivationError&) {
            ++t.failed_rows;
        }
    }
    const std::size_t total = grid_size(counts);
    if (t.failed_rows * 100 > total)
        throw FitError("more than 1% of the limit grid is unsolvable (" +
                       std::to_string(t.failed_rows) + " of " + std::to_string(total) + ")");
    return t;
}

void LimitSampleTable::save_csv(const std::string& path) const {
    CsvWriter w(path);
    std::vector<std::string> header = phi_names;
    header.push_back("nu_min");
    header.push_back("nu_max");
    w.write_header(header);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        std::vector<double> row = phi[i];
        row.push_back(nu_min[i]);
        row.push_back(nu_max[i]);
        w.write_row(row);
    }
    w.close();
}

double AffineFit::eval(const std::vector<double>& x) const {
    double v = coef[0];
    for (std::size_t i = 0; i < x.size(); ++i) v += coef[i + 1] * x[i];
    return v;
}

AffineFit fit_affine(const std::vector<std::vector<double>>& inputs,
                     const std::vector<double>& targets) {
    if (inputs.size() != targets.size()) throw FitError("inputs/targets size mismatch");
    const std::size_t m = inputs.size();
    const std::size_t dim = m ? inputs[0].size() : 0;
    const std::size_t p = dim + 1;
    if (m < p) throw RankDeficient("need at least dim+1 sample points");

    // Normal equations A = X'X, b = X'y with X = [1, inputs].
    std::vector<std::vector<double>> A(p, std::vector<double>(p, 0.0));
    std::vector<double> b(p, 0.0);
    std::vector<double> row(p);
    for (std::size_t r = 0; r < m; ++r) {
        row[0] = 1.0;
        for (std::size_t i = 0; i < dim; ++i) row[i + 1] = inputs[r][i];
        for (std::size_t i = 0; i < p; ++i) {
            b[i] += row[i] * targets[r];
            for (std::size_t j = 0; j < p; ++j) A[i][j] += row[i] * row[j];
        }
    }

    // Gaussian elimination with partial pivoting; track the pivot ratio as a
    // cheap reciprocal-condition estimate.
    std::vector<std::vector<double>> U = A;
    std::vector<double> x = b;
    double piv_max = 0.0, piv_min = 1e300;
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t piv = col;
        for (std::size_t r2 = col + 1; r2 < p; ++r2)
            if (std::abs(U[r2][col]) > std::abs(U[piv][col])) piv = r2;
        double pv = std::abs(U[piv][col]);
        piv_max = std::max(piv_max, pv);
        piv_min = std::min(piv_min, pv);
        if (pv == 0.0 || (piv_max > 0 && pv / piv_max < 1e-12))
            throw RankDeficient("normal matrix is rank deficient");
        std::swap(U[piv], U[col]);
        std::swap(x[piv], x[col]);
        for (std::size_t r2 = col + 1; r2 < p; ++r2) {
            double f = U[r2][col] / U[col][col];
            for (std::size_t c2 = col; c2 < p; ++c2) U[r2][c2] -= f * U[col][c2];
            x[r2] -= f * x[col];
        }
    }
    for (std::size_t i = p; i-- > 0;) {
        for (std::size_t c2 = i + 1; c2 < p; ++c2) x[i] -= U[i][c2] * x[c2];
        x[i] /= U[i][i];
    }

    AffineFit fit;
    fit.coef = x;
    fit.rcond = piv_max > 0 ? piv_min / piv_max : 0.0;
    double sum = 0.0, worst = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        double e = std::abs(fit.eval(inputs[r]) - targets[r]);
        sum += e;
        worst = std::max(worst, e);
    }
    fit.avg_abs_residual = sum / static_cast<double>(m);
    fit.max_abs_residual = worst;
    return fit;
}

double conservative_shift(AffineFit& fit, const std::vector<std::vector<double>>& inputs,
                          const std::vector<double>& targets, ShiftSide side) {
    double worst = 0.0;
    for (std::size_t r = 0; r < inputs.size(); ++r) {
        double f = fit.eval(inputs[r]);
        double viol = (side == ShiftSide::Upper) ? f - targets[r] : targets[r] - f;
        worst = std::max(worst, viol);
    }
    if (worst > 0.0) {
        if (side == ShiftSide::Upper) fit.coef[0] -= worst;
        else fit.coef[0] += worst;
    }
    return std::max(worst, 0.0);
}

double AffineLimitSet::eval_lo(const std::vector<double>& phi) const {
    double v = lo_coef[0];
    for (std::size_t i = 0; i < phi.size(); ++i) v += lo_coef[i + 1] * phi[i];
    return v;
}
double AffineLimitSet::eval_hi(const std::vector<double>& phi) const {
    double v = hi_coef[0];
    for (std::size_t i = 0; i < phi.size(); ++i) v += hi_coef[i + 1] * phi[i];
    return v;
}

AffineLimitSet fit_limit_set(const RampingDerivation& d, const std::vector<VariableRange>& box,
                             const std::vector<int>& counts) {
    LimitSampleTable t = sample_limits(d, box, counts);

    AffineFit lo = fit_affine(t.phi, t.nu_min);
    AffineFit hi = fit_affine(t.phi, t.nu_max);

    AffineLimitSet s;
    s.delta = d.delta;
    s.phi_names = d.phi_names;
    s.box = box;
    s.shift_lo = conservative_shift(lo, t.phi, t.nu_min, ShiftSide::Lower);
    s.shift_hi = conservative_shift(hi, t.phi, t.nu_max, ShiftSide::Upper);
    s.lo_coef = lo.coef;
    s.hi_coef = hi.coef;
    s.rho_min = d.model.rho_min;
    s.rho_max = d.model.rho_max;
    s.rho_nom = d.model.rho_nom;

    s.src_lo = -1e300;
    s.src_hi = 1e300;
    s.src_lo_exact = -1e300;
    s.src_hi_exact = 1e300;
    for (std::size_t i = 0; i < t.phi.size(); ++i) {
        double flo = s.eval_lo(t.phi[i]);
        double fhi = s.eval_hi(t.phi[i]);
        if (!(flo < fhi))
            throw EmptyBand("shifted band is empty at a grid point (nu_min >= nu_max)");
        s.src_lo = std::max(s.src_lo, flo);
        s.src_hi = std::min(s.src_hi, fhi);
        s.src_lo_exact = std::max(s.src_lo_exact, t.nu_min[i]);
        s.src_hi_exact = std::min(s.src_hi_exact, t.nu_max[i]);
    }
    return s;
}

KvTree AffineLimitSet::to_kv() const {
    KvTree t;
    t.set_int("format_version", 1);
    t.set("kind", "affine_limit_set");
    t.set_int("delta", delta);
    t.set_strings("phi", phi_names);
    for (std::size_t i = 0; i < phi_names.size(); ++i)
        t.set_numbers("box." + phi_names[i], {box[i].lo, box[i].hi});
    t.set_numbers("nu_min.coef", lo_coef);
    t.set_numbers("nu_max.coef", hi_coef);
    t.set_number("nu_min.shift", shift_lo);
    t.set_number("nu_max.shift", shift_hi);
    t.set_number("src.lo", src_lo);
    t.set_number("src.hi", src_hi);
    t.set_number("src.lo_exact", src_lo_exact);
    t.set_number("src.hi_exact", src_hi_exact);
    t.set_number("rate.min_per_h", rho_min);
    t.set_number("rate.max_per_h", rho_max);
    t.set_number("rate.nom_per_h", rho_nom);
    return t;
}

AffineLimitSet AffineLimitSet::from_kv(const KvTree& t) {
    if (t.get_or("kind", "") != "affine_limit_set")
        throw FitError("not an affine_limit_set file");
    AffineLimitSet s;
    s.delta = static_cast<int>(t.get_int("delta"));
    s.phi_names = t.get_strings("phi");
    for (const auto& p : s.phi_names) {
        auto v = t.get_numbers("box." + p);
        if (v.size() != 2) throw FitError("box." + p + " needs 'lo hi'");
        s.box.push_back({v[0], v[1]});
    }
    s.lo_coef = t.get_numbers("nu_min.coef");
    s.hi_coef = t.get_numbers("nu_max.coef");
    if (s.lo_coef.size() != s.phi_names.size() + 1 ||
        s.hi_coef.size() != s.phi_names.size() + 1)
        throw FitError("limit coefficient count does not match delta");
    s.shift_lo = t.get_number("nu_min.shift");
    s.shift_hi = t.get_number("nu_max.shift");
    s.src_lo = t.get_number("src.lo");
    s.src_hi = t.get_number("src.hi");
    s.src_lo_exact = t.get_number("src.lo_exact");
    s.src_hi_exact = t.get_number("src.hi_exact");
    s.rho_min = t.get_number("rate.min_per_h");
    s.rho_max = t.get_number("rate.max_per_h");
    s.rho_nom = t.get_number("rate.nom_per_h");
    return s;
}

void AffineLimitSet::save_file(const std::string& path) const { to_kv().save_file(path); }
AffineLimitSet AffineLimitSet::load_file(const std::string& path) {
    return from_kv(KvTree::load_file(path));
}

double DemandSurrogate::eval(const std::vector<double>& phi, double nu) const {
    double v = coef[0];
    for (std::size_t i = 0; i < phi.size(); ++i) v += coef[i + 1] * phi[i];
    return v + coef.back() * nu;
}

DemandSurrogate fit_demand(const RampingDerivation& d, const AffineLimitSet& limits,
                           const std::vector<VariableRange>& box,
                           const std::vector<int>& counts) {
    if (box.size() != d.phi_names.size())
        throw FitError("demand box must have one range per phi component");
    if (counts.size() != d.phi_names.size() + 1)
        throw FitError("demand grid needs one count per phi axis plus one for nu");
    for (int c : counts)
        if (c < 2) throw FitError("need at least 2 grid points per axis");

    // nu axis: extremes of the shifted planes over the limit box (affine, so
    // the extremes sit at box corners).
    double nu_lo = 1e300, nu_hi = -1e300;
    {
        const std::size_t dims = limits.phi_names.size();
        std::vector<double> corner(dims);
        for (std::size_t mask = 0; mask < (std::size_t(1) << dims); ++mask) {
            for (std::size_t a = 0; a < dims; ++a)
                corner[a] = (mask >> a) & 1 ? limits.box[a].hi : limits.box[a].lo;
            nu_lo = std::min(nu_lo, limits.eval_lo(corner));
            nu_hi = std::max(nu_hi, limits.eval_hi(corner));
        }
    }

    std::vector<VariableRange> full_box = box;
    full_box.push_back({nu_lo, nu_hi});

    CompiledDynamics dyn(d.model);

    DemandSurrogate s;
    s.delta = d.delta;
    s.nu_axis_lo = nu_lo;
    s.nu_axis_hi = nu_hi;

    GridWalker walk(full_box, counts);
    std::vector<double> point;
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;
    std::vector<double> warm;
    for (const auto& st : d.model.states) warm.push_back(d.model.nominal_state.at(st));
    while (walk.next(point)) {
        ++s.rows_total;
        RampingState phi{{point.begin(), point.end() - 1}};
        double nu = point.back();
        try {
            std::vector<double> x;
            try {
                x = d.solve_gamma(phi, warm);
            } catch (const NoConvergence&) {
                x = d.solve_gamma(phi);
            }
            warm = x;
            NuLimits lim = d.nu_limits_exact(phi, x);
            if (nu < lim.nu_min || nu > lim.nu_max) continue;
            double u = d.feedforward_u(phi, nu, x);
            // For delta = 0 the scheduling variable nu is rho itself.
            double rho = phi.phi.empty() ? nu : phi.phi[0];
            double q = dyn.demand(x, rho, u);
            inputs.push_back(point);
            targets.push_back(q);
        } catch (const DerivationError&) {
            continue;  // unsolvable rows are skipped and counted via rows_kept
        }
    }
    s.rows_kept = inputs.size();

    AffineFit fit = fit_affine(inputs, targets);
    s.coef = fit.coef;
    s.avg_abs_deviation = fit.avg_abs_residual;
    s.max_abs_deviation = fit.max_abs_residual;

    // Nominal demand: steady operation at rho_nom.
    {
        RampingState phi0{std::vector<double>(d.phi_names.size(), 0.0)};
        if (!phi0.phi.empty()) phi0.phi[0] = d.model.rho_nom;
        double nu0 = d.delta >= 1 ? 0.0 : d.model.rho_nom;
        std::vector<double> x = d.solve_gamma(phi0);
        double u = d.feedforward_u(phi0, nu0, x);
        s.nominal_demand = dyn.demand(x, d.model.rho_nom, u);
    }
    return s;
}

KvTree DemandSurrogate::to_kv() const {
    KvTree t;
    t.set_int("format_version", 1);
    t.set("kind", "demand_surrogate");
    t.set_int("delta", delta);
    t.set_numbers("coef", coef);
    t.set_number("nominal_demand", nominal_demand);
    t.set_number("avg_abs_deviation", avg_abs_deviation);
    t.set_number("max_abs_deviation", max_abs_deviation);
    t.set_int("rows_total", static_cast<long long>(rows_total));
    t.set_int("rows_kept", static_cast<long long>(rows_kept));
    t.set_numbers("nu_axis", {nu_axis_lo, nu_axis_hi});
    return t;
}

DemandSurrogate DemandSurrogate::from_kv(const KvTree& t) {
    if (t.get_or("kind", "") != "demand_surrogate")
        throw FitError("not a demand_surrogate file");
    DemandSurrogate s;
    s.delta = static_cast<int>(t.get_int("delta"));
    s.coef = t.get_numbers("coef");
    if (s.coef.size() != static_cast<std::size_t>(s.delta) + 2)
        throw FitError("surrogate coefficient count must be delta + 2");
    s.nominal_demand = t.get_number("nominal_demand");
    s.avg_abs_deviation = t.get_number("avg_abs_deviation");
    s.max_abs_deviation = t.get_number("max_abs_deviation");
    s.rows_total = static_cast<std::size_t>(t.get_int("rows_total"));
    s.rows_kept = static_cast<std::size_t>(t.get_int("rows_kept"));
    auto ax = t.get_numbers("nu_axis");
    s.nu_axis_lo = ax.at(0);
    s.nu_axis_hi = ax.at(1);
    return s;
}

void DemandSurrogate::save_file(const std::string& path) const { to_kv().save_file(path); }
DemandSurrogate DemandSurrogate::load_file(const std::string& path) {
    return from_kv(KvTree::load_file(path));
}

}  // namespace dynramp
