#include "dynramp/csv.hpp"

#include <cstdio>
#include <sstream>

namespace dynramp {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        std::size_t a = s.find_first_not_of(" \t");
        std::size_t b = s.find_last_not_of(" \t");
        s = (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
    }
    return out;
}

}  // namespace

CsvTable CsvTable::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CsvError("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(f, line)) throw CsvError("empty CSV '" + path + "'");
    t.header = split_csv(line);
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv(line);
        if (cells.size() != t.header.size())
            throw CsvError(path + ":" + std::to_string(lineno) + ": expected " +
                           std::to_string(t.header.size()) + " cells, got " +
                           std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size()) throw CsvError("");
            } catch (const std::exception&) {
                throw CsvError(path + ":" + std::to_string(lineno) +
                               ": non-numeric cell '" + c + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void CsvTable::save_file(const std::string& path) const {
    CsvWriter w(path);
    w.write_header(header);
    for (const auto& r : rows) w.write_row(r);
    w.close();
}

CsvWriter::CsvWriter(const std::string& path) : f_(path), path_(path) {
    if (!f_) throw CsvError("cannot write '" + path + "'");
}

void CsvWriter::write_header(const std::vector<std::string>& names) {
    width_ = names.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) f_ << ',';
        f_ << names[i];
    }
    f_ << '\n';
}

void CsvWriter::write_row(const std::vector<double>& values) {
    if (values.size() != width_)
        throw CsvError("row width " + std::to_string(values.size()) + " != header width " +
                       std::to_string(width_));
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) f_ << ',';
        std::snprintf(buf, sizeof buf, "%.17g", values[i]);
        f_ << buf;
    }
    f_ << '\n';
}

void CsvWriter::close() {
    f_.close();
    if (f_.fail()) throw CsvError("write failed for '" + path_ + "'");
}

}  // namespace dynramp
