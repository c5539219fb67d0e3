#ifndef DYNRAMP_KVTREE_HPP
#define DYNRAMP_KVTREE_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynramp {

class KvError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Line-oriented key-value tree used by every toolkit file format.
//
//   # comment
//   format_version 1
//   rate.min_per_h 0.8
//   states c T
//
// Keys are dotted paths, values are the remainder of the line. Numbers are
// written with 17 significant digits so write/read round-trips bit-exactly.
class KvTree {
  public:
    void set(const std::string& key, const std::string& value);
    void set_number(const std::string& key, double v);
    void set_int(const std::string& key, long long v);
    void set_numbers(const std::string& key, const std::vector<double>& vs);
    void set_strings(const std::string& key, const std::vector<std::string>& vs);

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_number(const std::string& key) const;
    double get_number_or(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    std::vector<double> get_numbers(const std::string& key) const;
    std::vector<std::string> get_strings(const std::string& key) const;

    // Keys below a dotted prefix, in file order, with the prefix stripped.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    std::string serialize() const;
    static KvTree parse(const std::string& text);

    static KvTree load_file(const std::string& path);
    void save_file(const std::string& path) const;

    static std::string format_number(double v);

  private:
    std::vector<std::string> order_;
    std::map<std::string, std::string> values_;
};

}  // namespace dynramp

#endif
