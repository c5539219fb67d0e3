#ifndef DYNRAMP_COLLOCATION_HPP
#define DYNRAMP_COLLOCATION_HPP

#include <stdexcept>
#include <vector>

namespace dynramp {

class CollocationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Radau (right) collocation points on (0, 1] with Lagrange differentiation
// coefficients over the extended node set {0, tau_1, ..., tau_K} and the
// K-point quadrature weights. The rule integrates degree <= 2K-2 exactly.
struct CollocationScheme {
    int K = 0;
    std::vector<double> nodes;                        // tau_1..tau_K, last = 1
    std::vector<std::vector<double>> deriv;           // deriv[j][i] = L_j'(tau_{i+1})
    std::vector<double> quad;                         // weights over tau_1..tau_K

    // Integral of the interpolating polynomial through values at {0, nodes}.
    double integrate(double v0, const std::vector<double>& vnodes) const;
};

CollocationScheme radau_scheme(int K);

// Per-hour closed-form propagation of the ramping integrator chain
// rho^(delta) = nu with nu constant on the interval. All node values and
// integrals are affine in (phi at interval start, nu); this supplies the
// coefficient vectors.
struct ChainMap {
    // value = const_term + sum_j phi_coef[j] * phi_start[j] + nu_coef * nu
    std::vector<double> phi_coef;
    double nu_coef = 0.0;
};

// Value of rho^(m) after elapsed time s (0 <= s <= interval length).
ChainMap chain_value(int delta, int m, double s);
// Integral of rho over [0, s].
ChainMap chain_integral(int delta, double s);
// Double integral (integral of the rho-integral), used for cumulative cost of
// storage-like states when needed.
ChainMap chain_integral2(int delta, double s);

// Explicit collocation transcription of the chain plus optional integral
// states over one horizon. Produces node-variable linear equality rows; used
// by tests and by the explicit scheduling mode.
struct DiscretizedChain {
    int delta = 0;
    int hours = 0;
    int elements_per_hour = 0;
    CollocationScheme scheme;

    // Node times, ascending, one entry per collocation node over the horizon.
    std::vector<double> node_times;

    // Solves the chain for a given per-hour-constant nu signal and initial
    // phi, returning node values of rho^(m) for m = 0..delta-1 by solving the
    // collocation equations element by element. For delta = 0 the "chain" is
    // empty and rho equals nu directly.
    // result[m][i] = value of rho^(m) at node_times[i]
    std::vector<std::vector<double>> solve_nodes(const std::vector<double>& nu_per_hour,
                                                 const std::vector<double>& phi0) const;

    // Same machinery for an integral state sdot = rate(t) with rate given at
    // nodes; returns node values of s with s(0) = s0.
    std::vector<double> solve_integral(const std::vector<double>& rate_at_nodes,
                                       double s0) const;
};

DiscretizedChain discretize_chain(int delta, int horizon_hours, int elements_per_hour,
                                  const CollocationScheme& scheme);

}  // namespace dynramp

#endif
