#include "dynramp/linearize.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace dynramp {

namespace {

Expr det_recursive(const std::vector<std::vector<Expr>>& m, std::vector<std::size_t> cols,
                   std::size_t row) {
    const std::size_t k = cols.size();
    if (k == 1) return m[row][cols[0]];
    Expr acc = Expr::constant(0.0);
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<std::size_t> rest;
        rest.reserve(k - 1);
        for (std::size_t q = 0; q < k; ++q)
            if (q != j) rest.push_back(cols[q]);
        Expr minor = det_recursive(m, rest, row + 1);
        Expr term = m[row][cols[j]] * minor;
        acc = (j % 2 == 0) ? acc + term : acc - term;
    }
    return acc;
}

Expr symbolic_det(const std::vector<std::vector<Expr>>& m) {
    std::vector<std::size_t> cols(m.size());
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = i;
    return det_recursive(m, cols, 0).simplified();
}

// Deterministic sign-constancy probe over the declared ranges. Grid for one
// or two free variables, fixed-seed sampling otherwise.
bool sign_constant(const Expr& e, const VariableRanges& ranges, double* sign_at_nominal,
                   const Binding& nominal) {
    double s0;
    try {
        s0 = e.eval(nominal);
    } catch (const EvalError&) {
        s0 = 0.0;
    }
    *sign_at_nominal = (s0 > 0.0) ? 1.0 : (s0 < 0.0 ? -1.0 : 0.0);
    if (*sign_at_nominal == 0.0) return false;

    auto vars = e.variables();
    std::vector<std::string> vnames(vars.begin(), vars.end());
    auto range_of = [&](const std::string& v) {
        auto it = ranges.find(v);
        if (it != ranges.end()) return it->second;
        return VariableRange{0.1, 2.0};
    };
    auto check = [&](const Binding& b) {
        double v;
        try {
            v = e.eval(b);
        } catch (const EvalError&) {
            return false;
        }
        return v * (*sign_at_nominal) > 0.0;
    };

    if (vnames.empty()) return true;
    if (vnames.size() <= 2) {
        const int G = 50;
        Binding b;
        VariableRange r0 = range_of(vnames[0]);
        VariableRange r1 = vnames.size() > 1 ? range_of(vnames[1]) : VariableRange{0, 0};
        for (int i = 0; i < G; ++i) {
            b[vnames[0]] = r0.lo + (r0.hi - r0.lo) * i / (G - 1);
            if (vnames.size() == 1) {
                if (!check(b)) return false;
                continue;
            }
            for (int j = 0; j < G; ++j) {
                b[vnames[1]] = r1.lo + (r1.hi - r1.lo) * j / (G - 1);
                if (!check(b)) return false;
            }
        }
        return true;
    }
    std::mt19937 rng(0x51f1u);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 2500; ++t) {
        Binding b;
        for (const auto& v : vnames) {
            VariableRange r = range_of(v);
            b[v] = r.lo + (r.hi - r.lo) * unit(rng);
        }
        if (!check(b)) return false;
    }
    return true;
}

}  // namespace

RampingDerivation derive(const ProcessModel& model) {
    model.validate();
    const std::size_t n = model.dim();

    RampingDerivation d;
    d.model = model;

    // Output must actually depend on the state.
    {
        bool any = false;
        for (const auto& s : model.states)
            if (!model.output.diff(s).simplified().is_constant(0.0)) any = true;
        if (!any) throw DegenerateOutput(model.name + ": output does not depend on the state");
    }

    d.alpha.push_back(model.output.simplified());
    int max_rate_deriv = -1;  // highest j with rho_d{j} present (rho itself is j=0)

    auto rate_order_of = [&](const Expr& e) {
        int hi = -1;
        for (const auto& v : e.variables()) {
            if (v == kRateVar) hi = std::max(hi, 0);
            else if (v.rfind(kRateVar + "_d", 0) == 0)
                hi = std::max(hi, std::stoi(v.substr(kRateVar.size() + 2)));
        }
        return hi;
    };

    Expr input_coeff = Expr::constant(0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const Expr& a = d.alpha.back();

        Expr gu = Expr::constant(0.0);
        for (std::size_t i = 0; i < n; ++i) gu = gu + a.diff(model.states[i]) * model.f2_u[i];
        gu = gu.simplified();

        if (k + 1 < n) {
            ZeroStatus zs = zero_status(gu, model.ranges);
            if (zs == ZeroStatus::NonZero)
                throw RelativeDegreeMismatch(
                    model.name + ": input appears after " + std::to_string(k + 1) +
                    " differentiation(s); relative degree < number of states");
            if (zs == ZeroStatus::NumericZero) d.input_test_numeric = true;
        } else {
            if (zero_status(gu, model.ranges) != ZeroStatus::NonZero)
                throw RelativeDegreeMismatch(
                    model.name + ": input never appears within " + std::to_string(n) +
                    " differentiations; relative degree > number of states");
            input_coeff = gu;
        }

        max_rate_deriv = std::max(max_rate_deriv, rate_order_of(a));

        Expr next = Expr::constant(0.0);
        for (std::size_t i = 0; i < n; ++i)
            next = next + a.diff(model.states[i]) *
                              (model.f1[i] + model.f2_rho[i] * Expr::variable(kRateVar));
        int shift_to = (k + 1 < n) ? max_rate_deriv : max_rate_deriv - 1;
        for (int j = 0; j <= shift_to; ++j) {
            Expr dj = a.diff(rate_derivative_name(j)).simplified();
            if (dj.is_constant(0.0)) continue;
            next = next + dj * Expr::variable(rate_derivative_name(j + 1));
        }
        if (k + 1 < n) {
            d.alpha.push_back(next.simplified());
        } else {
            // Final step: split off beta_u and beta_rho.
            d.relative_degree = static_cast<int>(n);
            d.delta = max_rate_deriv + 1;
            d.beta_u = input_coeff;
            if (d.delta >= 1) {
                d.beta_rho = a.diff(rate_derivative_name(d.delta - 1)).simplified();
                d.alpha.push_back(next.simplified());
            } else {
                // Quasi-steady case: rho itself is the scheduling variable.
                Expr brho = Expr::constant(0.0);
                Expr drift = Expr::constant(0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    brho = brho + a.diff(model.states[i]) * model.f2_rho[i];
                    drift = drift + a.diff(model.states[i]) * model.f1[i];
                }
                d.beta_rho = brho.simplified();
                Expr an = drift.simplified();
                if (rate_order_of(an) >= 0 || rate_order_of(d.beta_rho) >= 0)
                    throw DerivationError(model.name +
                                          ": delta = 0 with rho inside the drift is not "
                                          "supported");
                d.alpha.push_back(an);
            }
        }
    }

    for (int j = 0; j < d.delta; ++j) d.phi_names.push_back(rate_derivative_name(j));

    d.jacobian.assign(n, std::vector<Expr>(n, Expr::constant(0.0)));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            d.jacobian[k][i] = d.alpha[k].diff(model.states[i]).simplified();
    d.det_jacobian = symbolic_det(d.jacobian);

    Binding nominal;
    for (const auto& s : model.states) nominal[s] = model.nominal_state.at(s);
    nominal[kRateVar] = model.rho_nom;
    for (int j = 1; j < d.delta; ++j) nominal[rate_derivative_name(j)] = 0.0;
    d.det_at_nominal = d.det_jacobian.eval(nominal);

    if (!sign_constant(d.beta_u, model.ranges, &d.beta_u_sign, nominal))
        throw SignFlip(model.name + ": beta_u changes sign over the probed operating box");
    if (!sign_constant(d.beta_rho, model.ranges, &d.beta_rho_sign, nominal))
        throw SignFlip(model.name + ": beta_rho changes sign over the probed operating box");
    d.beta_same_sign = (d.beta_u_sign * d.beta_rho_sign) > 0.0;

    d.compile();
    return d;
}

void RampingDerivation::compile() {
    if (compiled_) return;
    packed_order_ = model.states;
    for (const auto& p : phi_names) packed_order_.push_back(p);
    c_alpha_.clear();
    for (const auto& a : alpha) c_alpha_.emplace_back(a, packed_order_);
    c_beta_u_ = CompiledExpr(beta_u, packed_order_);
    c_beta_rho_ = CompiledExpr(beta_rho, packed_order_);
    c_det_ = CompiledExpr(det_jacobian, packed_order_);
    c_jac_.clear();
    c_jac_.resize(jacobian.size());
    for (std::size_t k = 0; k < jacobian.size(); ++k)
        for (std::size_t i = 0; i < jacobian[k].size(); ++i)
            c_jac_[k].emplace_back(jacobian[k][i], packed_order_);
    compiled_ = true;
}

std::vector<double> RampingDerivation::pack(const std::vector<double>& x,
                                            const RampingState& phi) const {
    if (x.size() != n_states())
        throw DerivationError("state vector has wrong dimension");
    if (phi.phi.size() != phi_names.size())
        throw DerivationError("ramping state has wrong dimension (expected " +
                              std::to_string(phi_names.size()) + ")");
    std::vector<double> packed(x);
    packed.insert(packed.end(), phi.phi.begin(), phi.phi.end());
    return packed;
}

double RampingDerivation::eval_alpha(std::size_t k, const std::vector<double>& p) const {
    return c_alpha_[k].eval(p);
}
double RampingDerivation::eval_beta_u(const std::vector<double>& p) const {
    return c_beta_u_.eval(p);
}
double RampingDerivation::eval_beta_rho(const std::vector<double>& p) const {
    return c_beta_rho_.eval(p);
}
double RampingDerivation::eval_det_jacobian(const std::vector<double>& p) const {
    return c_det_.eval(p);
}

namespace {

// Dense Gaussian elimination with partial pivoting; n is 2 or 3 here.
bool solve_dense(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t c = i + 1; c < n; ++c) b[i] -= a[i][c] * b[c];
        b[i] /= a[i][i];
    }
    return true;
}

}  // namespace

std::vector<double> RampingDerivation::solve_gamma(const RampingState& phi) const {
    std::vector<double> guess;
    for (const auto& s : model.states) guess.push_back(model.nominal_state.at(s));
    return solve_gamma(phi, guess);
}

std::vector<double> RampingDerivation::solve_gamma(const RampingState& phi,
                                                   const std::vector<double>& guess) const {
    const std::size_t n = n_states();
    std::vector<double> packed = pack(guess, phi);
    const double tol = 1e-11;
    const int max_iter = 50;

    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<double> resid(n);
        resid[0] = eval_alpha(0, packed) - model.y_nom;
        for (std::size_t k = 1; k < n; ++k) resid[k] = eval_alpha(k, packed);
        double rn = 0.0;
        for (double r : resid) rn = std::max(rn, std::abs(r));
        if (rn <= tol) {
            for (std::size_t i = 0; i < n; ++i) {
                const auto& name = model.states[i];
                auto it = model.ranges.find(name);
                if (it != model.ranges.end() &&
                    (packed[i] < it->second.lo - 1e-9 || packed[i] > it->second.hi + 1e-9))
                    throw OutOfRange(model.name + ": recovered state '" + name +
                                     "' = " + std::to_string(packed[i]) +
                                     " outside declared range");
            }
            return std::vector<double>(packed.begin(), packed.begin() + n);
        }

        double det = eval_det_jacobian(packed);
        if (std::abs(det) < 1e-12)
            throw SingularJacobian(model.name + ": |det J| < 1e-12 during Newton iteration");

        std::vector<std::vector<double>> J(n, std::vector<double>(n));
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i) J[k][i] = c_jac_[k][i].eval(packed);
        std::vector<double> step = resid;
        if (!solve_dense(J, step))
            throw SingularJacobian(model.name + ": Jacobian factorization failed");
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            packed[i] -= step[i];
            if (!std::isfinite(packed[i])) finite = false;
        }
        if (!finite) throw NoConvergence(model.name + ": Newton iterate diverged");
    }
    throw NoConvergence(model.name + ": state recovery did not converge in 50 iterations");
}

NuLimits RampingDerivation::nu_limits_exact(const RampingState& phi) const {
    return nu_limits_exact(phi, solve_gamma(phi));
}

NuLimits RampingDerivation::nu_limits_exact(const RampingState& phi,
                                            const std::vector<double>& x) const {
    std::vector<double> packed = pack(x, phi);
    const double a = eval_alpha(n_states(), packed);
    const double bu = eval_beta_u(packed);
    const double br = eval_beta_rho(packed);
    if (bu * beta_u_sign <= 0.0)
        throw SignFlip(model.name + ": beta_u sign flipped relative to nominal orientation");
    if (br * beta_rho_sign <= 0.0)
        throw SignFlip(model.name + ": beta_rho sign flipped relative to nominal orientation");

    // Same sign pairs u_max with nu_min; opposite sign swaps the input bounds.
    double u_for_min = beta_same_sign ? model.u_max : model.u_min;
    double u_for_max = beta_same_sign ? model.u_min : model.u_max;
    NuLimits lim;
    lim.nu_min = (-a - bu * u_for_min) / br;
    lim.nu_max = (-a - bu * u_for_max) / br;
    return lim;
}

double RampingDerivation::feedforward_u(const RampingState& phi, double nu) const {
    return feedforward_u(phi, nu, solve_gamma(phi));
}

double RampingDerivation::feedforward_u(const RampingState& phi, double nu,
                                        const std::vector<double>& x) const {
    NuLimits lim = nu_limits_exact(phi, x);
    const double slack = 1e-9 * std::max(1.0, std::abs(lim.nu_max - lim.nu_min));
    if (nu < lim.nu_min - slack || nu > lim.nu_max + slack)
        throw OutOfRampRange(model.name + ": nu = " + std::to_string(nu) +
                             " outside exact limits [" + std::to_string(lim.nu_min) + ", " +
                             std::to_string(lim.nu_max) + "]");
    std::vector<double> packed = pack(x, phi);
    const double a = eval_alpha(n_states(), packed);
    const double bu = eval_beta_u(packed);
    const double br = eval_beta_rho(packed);
    double u = (-a - br * nu) / bu;
    // Clamp the sub-slack overshoot so callers get a bound-feasible input.
    return std::min(std::max(u, model.u_min), model.u_max);
}

std::string RampingDerivation::report() const {
    std::ostringstream os;
    os << "ramping derivation for model '" << model.name << "'\n";
    os << "  states: ";
    for (const auto& s : model.states) os << s << ' ';
    os << "\n  relative degree r = " << relative_degree;
    os << "\n  ramping order   delta = " << delta << "\n";
    os << "  phi = (";
    for (std::size_t i = 0; i < phi_names.size(); ++i)
        os << (i ? ", " : "") << phi_names[i];
    os << ")\n\n";
    for (std::size_t k = 0; k < alpha.size(); ++k)
        os << "  alpha_" << k << " = " << alpha[k].str() << "\n";
    os << "  beta_u   = " << beta_u.str() << "\n";
    os << "  beta_rho = " << beta_rho.str() << "\n";
    os << "  det J    = " << det_jacobian.str() << "\n\n";
    os << "  det J at nominal point = " << KvTree::format_number(det_at_nominal) << "\n";
    {
        Binding nominal;
        for (const auto& s2 : model.states) nominal[s2] = model.nominal_state.at(s2);
        nominal[kRateVar] = model.rho_nom;
        for (int j = 1; j < delta; ++j) nominal[rate_derivative_name(j)] = 0.0;
        try {
            os << "  beta_u at nominal point = "
               << KvTree::format_number(beta_u.eval(nominal)) << "\n";
            os << "  beta_rho at nominal point = "
               << KvTree::format_number(beta_rho.eval(nominal)) << "\n";
        } catch (const EvalError&) {
        }
    }
    os << "  sign(beta_u) = " << (beta_u_sign > 0 ? "+" : "-")
       << ", sign(beta_rho) = " << (beta_rho_sign > 0 ? "+" : "-")
       << (beta_same_sign ? " (same sign)" : " (opposite sign)") << "\n";
    if (input_test_numeric)
        os << "  note: relative-degree zero test used the numeric fallback\n";
    return os.str();
}

KvTree RampingDerivation::to_kv() const {
    KvTree t = model.to_kv();
    t.set("kind", "ramping_derivation");
    t.set_int("derivation.r", relative_degree);
    t.set_int("derivation.delta", delta);
    for (std::size_t k = 0; k < alpha.size(); ++k)
        t.set("derivation.alpha" + std::to_string(k), alpha[k].str());
    t.set("derivation.beta_u", beta_u.str());
    t.set("derivation.beta_rho", beta_rho.str());
    for (std::size_t k = 0; k < jacobian.size(); ++k)
        for (std::size_t i = 0; i < jacobian[k].size(); ++i)
            t.set("derivation.jacobian." + std::to_string(k) + "." + std::to_string(i),
                  jacobian[k][i].str());
    t.set("derivation.det_jacobian", det_jacobian.str());
    t.set_int("derivation.beta_same_sign", beta_same_sign ? 1 : 0);
    t.set_number("derivation.beta_u_sign", beta_u_sign);
    t.set_number("derivation.beta_rho_sign", beta_rho_sign);
    t.set_number("derivation.det_at_nominal", det_at_nominal);
    t.set_int("derivation.input_test_numeric", input_test_numeric ? 1 : 0);
    return t;
}

RampingDerivation RampingDerivation::from_kv(const KvTree& t) {
    if (t.get_or("kind", "") != "ramping_derivation")
        throw DerivationError("not a ramping_derivation file");
    KvTree mt = t;
    mt.set("kind", "process_model");
    RampingDerivation d;
    d.model = ProcessModel::from_kv(mt);
    d.relative_degree = static_cast<int>(t.get_int("derivation.r"));
    d.delta = static_cast<int>(t.get_int("derivation.delta"));
    for (int j = 0; j < d.delta; ++j) d.phi_names.push_back(rate_derivative_name(j));
    const std::size_t n = d.model.dim();
    for (std::size_t k = 0; k <= n; ++k)
        d.alpha.push_back(parse_expression(t.get("derivation.alpha" + std::to_string(k))));
    d.beta_u = parse_expression(t.get("derivation.beta_u"));
    d.beta_rho = parse_expression(t.get("derivation.beta_rho"));
    d.jacobian.assign(n, std::vector<Expr>(n, Expr::constant(0.0)));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            d.jacobian[k][i] = parse_expression(
                t.get("derivation.jacobian." + std::to_string(k) + "." + std::to_string(i)));
    d.det_jacobian = parse_expression(t.get("derivation.det_jacobian"));
    d.beta_same_sign = t.get_int("derivation.beta_same_sign") != 0;
    d.beta_u_sign = t.get_number("derivation.beta_u_sign");
    d.beta_rho_sign = t.get_number("derivation.beta_rho_sign");
    d.det_at_nominal = t.get_number("derivation.det_at_nominal");
    d.input_test_numeric = t.get_int("derivation.input_test_numeric") != 0;
    d.compile();
    return d;
}

void RampingDerivation::save_file(const std::string& path) const { to_kv().save_file(path); }

RampingDerivation RampingDerivation::load_file(const std::string& path) {
    return from_kv(KvTree::load_file(path));
}

CompiledDynamics::CompiledDynamics(const ProcessModel& m) : n_(m.dim()) {
    std::vector<std::string> order = m.states;
    order.push_back(kRateVar);
    order.push_back(m.input_name);
    for (std::size_t i = 0; i < n_; ++i) {
        f1_.emplace_back(m.f1[i], order);
        f2u_.emplace_back(m.f2_u[i], order);
        f2rho_.emplace_back(m.f2_rho[i], order);
    }
    demand_ = CompiledExpr(m.demand, order);
    packed_.resize(n_ + 2);
}

void CompiledDynamics::rhs(const std::vector<double>& x, double rho, double u,
                           std::vector<double>& out) const {
    for (std::size_t i = 0; i < n_; ++i) packed_[i] = x[i];
    packed_[n_] = rho;
    packed_[n_ + 1] = u;
    out.resize(n_);
    for (std::size_t i = 0; i < n_; ++i)
        out[i] = f1_[i].eval(packed_.data()) + f2u_[i].eval(packed_.data()) * u +
                 f2rho_[i].eval(packed_.data()) * rho;
}

double CompiledDynamics::demand(const std::vector<double>& x, double rho, double u) const {
    for (std::size_t i = 0; i < n_; ++i) packed_[i] = x[i];
    packed_[n_] = rho;
    packed_[n_ + 1] = u;
    return demand_.eval(packed_.data());
}

}  // namespace dynramp
