#include <cstdio>
#include <fstream>
#include <sstream>

#include "dynramp/lp.hpp"

namespace dynramp {

namespace {

std::string num(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_num(const std::string& s) {
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return std::stod(s);
}

char sense_char(RowSense s) {
    switch (s) {
        case RowSense::LE: return '<';
        case RowSense::GE: return '>';
        case RowSense::EQ: return '=';
    }
    return '?';
}

RowSense parse_sense(const std::string& s) {
    if (s == "<") return RowSense::LE;
    if (s == ">") return RowSense::GE;
    if (s == "=") return RowSense::EQ;
    throw LpError("bad row sense '" + s + "'");
}

}  // namespace

std::string dump_lp(const MilpProblem& p) {
    std::ostringstream os;
    os << "dynramp_lp 1\n";
    os << "name " << (p.name.empty() ? "problem" : p.name) << "\n";
    os << "vars " << p.num_vars() << "\n";
    for (std::int32_t j = 0; j < p.num_vars(); ++j)
        os << "v " << j << ' ' << (p.var_names[j].empty() ? "x" + std::to_string(j) : p.var_names[j])
           << ' ' << num(p.lower[j]) << ' ' << num(p.upper[j]) << ' ' << num(p.objective[j])
           << "\n";
    os << "binaries " << p.binaries.size();
    for (std::int32_t b : p.binaries) os << ' ' << b;
    os << "\n";
    os << "rows " << p.rows.size() << "\n";
    for (const auto& r : p.rows) {
        os << "r " << (r.name.empty() ? "row" : r.name) << ' ' << sense_char(r.sense) << ' '
           << num(r.rhs) << ' ' << (r.lazy ? 1 : 0) << ' ' << r.idx.size();
        for (std::size_t k = 0; k < r.idx.size(); ++k)
            os << ' ' << r.idx[k] << ' ' << num(r.val[k]);
        os << "\n";
    }
    return os.str();
}

MilpProblem parse_lp(const std::string& text) {
    std::istringstream is(text);
    std::string tok;
    is >> tok;
    if (tok != "dynramp_lp") throw LpError("not a dynramp_lp dump");
    int version;
    is >> version;
    if (version != 1) throw LpError("unsupported dump version");
    MilpProblem p;
    is >> tok >> p.name;
    std::int32_t nvars;
    is >> tok >> nvars;
    if (tok != "vars") throw LpError("expected 'vars'");
    for (std::int32_t i = 0; i < nvars; ++i) {
        std::string tag, name, lo, hi, obj;
        std::int32_t idx;
        is >> tag >> idx >> name >> lo >> hi >> obj;
        if (tag != "v" || idx != i) throw LpError("bad variable record");
        p.add_var(name, parse_num(lo), parse_num(hi), parse_num(obj));
    }
    std::size_t nbin;
    is >> tok >> nbin;
    if (tok != "binaries") throw LpError("expected 'binaries'");
    for (std::size_t i = 0; i < nbin; ++i) {
        std::int32_t b;
        is >> b;
        p.add_binary(b);
    }
    std::size_t nrows;
    is >> tok >> nrows;
    if (tok != "rows") throw LpError("expected 'rows'");
    for (std::size_t i = 0; i < nrows; ++i) {
        std::string tag, name, sense, rhs;
        int lazy;
        std::size_t nnz;
        is >> tag >> name >> sense >> rhs >> lazy >> nnz;
        if (tag != "r") throw LpError("bad row record");
        SparseRow& r = p.add_row(parse_sense(sense), parse_num(rhs), name, lazy != 0);
        for (std::size_t k = 0; k < nnz; ++k) {
            std::int32_t idx;
            std::string val;
            is >> idx >> val;
            r.idx.push_back(idx);
            r.val.push_back(parse_num(val));
        }
    }
    if (!is) throw LpError("truncated dump");
    p.validate();
    return p;
}

void save_lp_file(const MilpProblem& p, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw LpError("cannot write '" + path + "'");
    f << dump_lp(p);
    if (!f) throw LpError("write failed for '" + path + "'");
}

MilpProblem load_lp_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw LpError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_lp(ss.str());
}

}  // namespace dynramp
