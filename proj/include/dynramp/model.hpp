#ifndef DYNRAMP_MODEL_HPP
#define DYNRAMP_MODEL_HPP

#include <map>
#include <string>
#include <vector>

#include "dynramp/expr.hpp"
#include "dynramp/kvtree.hpp"

namespace dynramp {

class ModelError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// The production-rate symbol used throughout model expressions.
inline const std::string kRateVar = "rho";

// Name of the j-th time derivative of the production rate: rho, rho_d1, ...
std::string rate_derivative_name(int j);

// Input-affine SISO process model
//   xdot = f1(x) + f2_u(x) u + f2_rho(x) rho
// with a quality output h(x) to be held at its nominal value.
struct ProcessModel {
    std::string name;
    std::vector<std::string> states;
    std::vector<Expr> f1;
    std::vector<Expr> f2_u;
    std::vector<Expr> f2_rho;
    Expr output;
    double y_nom = 0.0;

    std::string input_name = "u";
    double u_min = 0.0;
    double u_max = 1.0;

    double rho_min = 0.0;
    double rho_max = 1.0;
    double rho_nom = 0.0;

    // Instantaneous process energy demand as a function of x and the input.
    Expr demand;

    // Newton initial guess for the state recovery.
    std::map<std::string, double> nominal_state;

    // Probing/validity ranges for states, rho, and rho derivatives.
    VariableRanges ranges;

    std::size_t dim() const { return states.size(); }
    void validate() const;

    static ProcessModel from_kv(const KvTree& t);
    static ProcessModel load_file(const std::string& path);
    KvTree to_kv() const;
};

}  // namespace dynramp

#endif
