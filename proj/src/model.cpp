#include "dynramp/model.hpp"

#include <algorithm>

namespace dynramp {

std::string rate_derivative_name(int j) {
    if (j == 0) return kRateVar;
    return kRateVar + "_d" + std::to_string(j);
}

void ProcessModel::validate() const {
    const std::size_t n = states.size();
    if (n == 0) throw ModelError(name + ": model has no states");
    if (f1.size() != n || f2_u.size() != n || f2_rho.size() != n)
        throw ModelError(name + ": f1/f2 blocks must all have one expression per state");
    if (!(u_min < u_max)) throw ModelError(name + ": input bounds must satisfy min < max");
    if (!(rho_min < rho_nom && rho_nom < rho_max))
        throw ModelError(name + ": production-rate bounds must satisfy min < nom < max");

    std::set<std::string> allowed(states.begin(), states.end());
    allowed.insert(kRateVar);
    auto check_vars = [&](const Expr& e, const std::string& what, bool with_input) {
        for (const auto& v : e.variables()) {
            if (allowed.count(v)) continue;
            if (with_input && v == input_name) continue;
            throw ModelError(name + ": " + what + " references unknown symbol '" + v + "'");
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        check_vars(f1[i], "f1." + states[i], false);
        check_vars(f2_u[i], "f2u." + states[i], false);
        check_vars(f2_rho[i], "f2r." + states[i], false);
    }
    check_vars(output, "output", false);
    check_vars(demand, "demand", true);

    for (const auto& s : states) {
        if (!nominal_state.count(s))
            throw ModelError(name + ": missing nominal value for state '" + s + "'");
        if (!ranges.count(s)) throw ModelError(name + ": missing range for state '" + s + "'");
    }
    if (!ranges.count(kRateVar)) throw ModelError(name + ": missing range for 'rho'");
    for (const auto& [v, r] : ranges)
        if (!(r.lo < r.hi)) throw ModelError(name + ": empty range for '" + v + "'");
}

ProcessModel ProcessModel::from_kv(const KvTree& t) {
    if (t.get_or("kind", "") != "process_model")
        throw ModelError("not a process_model file");
    ProcessModel m;
    m.name = t.get("name");
    m.states = t.get_strings("states");

    std::map<std::string, double> params;
    for (const auto& p : t.keys_with_prefix("param."))
        params[p] = t.get_number("param." + p);

    auto expr_of = [&](const std::string& key) {
        try {
            return parse_expression(t.get(key)).substitute_constants(params).simplified();
        } catch (const ParseError& e) {
            throw ModelError(m.name + ": " + key + ": " + e.what());
        }
    };

    for (const auto& s : m.states) {
        m.f1.push_back(expr_of("f1." + s));
        m.f2_u.push_back(expr_of("f2u." + s));
        m.f2_rho.push_back(expr_of("f2r." + s));
    }
    m.output = expr_of("output.expr");
    m.y_nom = t.get_number("output.nom");
    m.input_name = t.get("input.name");
    m.u_min = t.get_number("input.min_per_h");
    m.u_max = t.get_number("input.max_per_h");
    m.rho_min = t.get_number("rate.min_per_h");
    m.rho_max = t.get_number("rate.max_per_h");
    m.rho_nom = t.get_number("rate.nom_per_h");
    m.demand = expr_of("demand.expr");

    for (const auto& s : m.states) m.nominal_state[s] = t.get_number("nominal." + s);
    for (const auto& key : t.keys_with_prefix("range.")) {
        auto vals = t.get_numbers("range." + key);
        if (vals.size() != 2) throw ModelError(m.name + ": range." + key + " needs 'lo hi'");
        m.ranges[key] = VariableRange{vals[0], vals[1]};
    }
    m.validate();
    return m;
}

ProcessModel ProcessModel::load_file(const std::string& path) {
    try {
        return from_kv(KvTree::load_file(path));
    } catch (const KvError& e) {
        throw ModelError(std::string("model file: ") + e.what());
    }
}

KvTree ProcessModel::to_kv() const {
    KvTree t;
    t.set_int("format_version", 1);
    t.set("kind", "process_model");
    t.set("name", name);
    t.set_strings("states", states);
    for (std::size_t i = 0; i < states.size(); ++i) {
        t.set("f1." + states[i], f1[i].str());
        t.set("f2u." + states[i], f2_u[i].str());
        t.set("f2r." + states[i], f2_rho[i].str());
    }
    t.set("output.expr", output.str());
    t.set_number("output.nom", y_nom);
    t.set("input.name", input_name);
    t.set_number("input.min_per_h", u_min);
    t.set_number("input.max_per_h", u_max);
    t.set_number("rate.min_per_h", rho_min);
    t.set_number("rate.max_per_h", rho_max);
    t.set_number("rate.nom_per_h", rho_nom);
    t.set("demand.expr", demand.str());
    for (const auto& s : states) t.set_number("nominal." + s, nominal_state.at(s));
    for (const auto& [v, r] : ranges) t.set_numbers("range." + v, {r.lo, r.hi});
    return t;
}

}  // namespace dynramp
