#include "dynramp/kvtree.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dynramp {

std::string KvTree::format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void KvTree::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
}

void KvTree::set_number(const std::string& key, double v) { set(key, format_number(v)); }

void KvTree::set_int(const std::string& key, long long v) { set(key, std::to_string(v)); }

void KvTree::set_numbers(const std::string& key, const std::vector<double>& vs) {
    std::string s;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) s += ' ';
        s += format_number(vs[i]);
    }
    set(key, s);
}

void KvTree::set_strings(const std::string& key, const std::vector<std::string>& vs) {
    std::string s;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) s += ' ';
        s += vs[i];
    }
    set(key, s);
}

bool KvTree::has(const std::string& key) const { return values_.count(key) != 0; }

const std::string& KvTree::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw KvError("missing key '" + key + "'");
    return it->second;
}

std::string KvTree::get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KvTree::get_number(const std::string& key) const {
    const std::string& s = get(key);
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
        if (used != s.size()) throw KvError("");
        return v;
    } catch (const std::exception&) {
        throw KvError("key '" + key + "' is not a number: '" + s + "'");
    }
}

double KvTree::get_number_or(const std::string& key, double fallback) const {
    return has(key) ? get_number(key) : fallback;
}

long long KvTree::get_int(const std::string& key) const {
    const std::string& s = get(key);
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) throw KvError("");
        return v;
    } catch (const std::exception&) {
        throw KvError("key '" + key + "' is not an integer: '" + s + "'");
    }
}

std::vector<double> KvTree::get_numbers(const std::string& key) const {
    std::istringstream is(get(key));
    std::vector<double> out;
    std::string tok;
    while (is >> tok) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw KvError("key '" + key + "' has a non-numeric entry '" + tok + "'");
        }
    }
    return out;
}

std::vector<std::string> KvTree::get_strings(const std::string& key) const {
    std::istringstream is(get(key));
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

std::vector<std::string> KvTree::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& k : order_)
        if (k.rfind(prefix, 0) == 0) out.push_back(k.substr(prefix.size()));
    return out;
}

std::string KvTree::serialize() const {
    std::string out;
    for (const auto& k : order_) {
        out += k;
        out += ' ';
        out += values_.at(k);
        out += '\n';
    }
    return out;
}

KvTree KvTree::parse(const std::string& text) {
    KvTree t;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t i = 0;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i == line.size() || line[i] == '#') continue;
        std::size_t ks = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::string key = line.substr(ks, i - ks);
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t end = line.size();
        while (end > i && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
        if (end <= i)
            throw KvError("line " + std::to_string(lineno) + ": key '" + key + "' has no value");
        t.set(key, line.substr(i, end - i));
    }
    return t;
}

KvTree KvTree::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw KvError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

void KvTree::save_file(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw KvError("cannot write '" + path + "'");
    f << serialize();
    if (!f) throw KvError("write failed for '" + path + "'");
}

}  // namespace dynramp
