#ifndef DYNRAMP_CSV_HPP
#define DYNRAMP_CSV_HPP

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynramp {

class CsvError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Comma-separated table with a mandatory header row and dot-decimal numbers.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw CsvError("missing CSV column '" + name + "'");
    }
    std::vector<double> column_values(const std::string& name) const {
        std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }

    static CsvTable load_file(const std::string& path);
    void save_file(const std::string& path) const;
};

class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path);
    void write_header(const std::vector<std::string>& names);
    void write_row(const std::vector<double>& values);
    void close();

  private:
    std::ofstream f_;
    std::string path_;
    std::size_t width_ = 0;
};

}  // namespace dynramp

#endif
