#ifndef DYNRAMP_LIMITFIT_HPP
#define DYNRAMP_LIMITFIT_HPP

#include <string>
#include <vector>

#include "dynramp/linearize.hpp"

namespace dynramp {

class FitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class RankDeficient : public FitError {
  public:
    using FitError::FitError;
};
class EmptyBand : public FitError {
  public:
    using FitError::FitError;
};

// Cartesian grid of exact nonlinear ramping limits over the phi box.
struct LimitSampleTable {
    std::vector<std::string> phi_names;
    std::vector<VariableRange> box;
    std::vector<int> counts;
    std::vector<std::vector<double>> phi;  // one row per solvable grid point
    std::vector<double> nu_min;
    std::vector<double> nu_max;
    std::size_t failed_rows = 0;

    void save_csv(const std::string& path) const;
};

// Exact limits evaluated on the grid; rows where the state recovery fails are
// excluded and counted. Fails if more than 1% of the grid is unsolvable.
LimitSampleTable sample_limits(const RampingDerivation& d,
                               const std::vector<VariableRange>& box,
                               const std::vector<int>& counts);

struct AffineFit {
    std::vector<double> coef;  // intercept, then one slope per input column
    double avg_abs_residual = 0.0;
    double max_abs_residual = 0.0;
    double rcond = 0.0;  // reciprocal condition estimate of the normal matrix

    double eval(const std::vector<double>& x) const;
};

// Ordinary least squares via the normal equations.
AffineFit fit_affine(const std::vector<std::vector<double>>& inputs,
                     const std::vector<double>& targets);

enum class ShiftSide { Lower, Upper };

// Moves the intercept by the largest signed violation over the samples so the
// shifted plane is conservative on every sample; returns the applied shift.
double conservative_shift(AffineFit& fit, const std::vector<std::vector<double>>& inputs,
                          const std::vector<double>& targets, ShiftSide side);

// Conservative affine band for the ramping degree of freedom plus the static
// constants derived from it.
struct AffineLimitSet {
    int delta = 0;
    std::vector<std::string> phi_names;
    std::vector<VariableRange> box;
    std::vector<double> lo_coef;  // nu_min(phi) >= lo_coef . (1, phi)
    std::vector<double> hi_coef;  // nu_max(phi) <= hi_coef . (1, phi)
    double shift_lo = 0.0;        // recorded pre-shift max violations
    double shift_hi = 0.0;
    double src_lo = 0.0;  // extremal values of the shifted planes over the box
    double src_hi = 0.0;
    double src_lo_exact = 0.0;  // extremal exact limits over the fitting grid
    double src_hi_exact = 0.0;
    double rho_min = 0.0;  // production-rate box copied from the model
    double rho_max = 0.0;
    double rho_nom = 0.0;

    double eval_lo(const std::vector<double>& phi) const;
    double eval_hi(const std::vector<double>& phi) const;

    KvTree to_kv() const;
    static AffineLimitSet from_kv(const KvTree& t);
    void save_file(const std::string& path) const;
    static AffineLimitSet load_file(const std::string& path);
};

AffineLimitSet fit_limit_set(const RampingDerivation& d, const std::vector<VariableRange>& box,
                             const std::vector<int>& counts);

// Affine process-demand surrogate over (phi, nu).
struct DemandSurrogate {
    int delta = 0;
    std::vector<double> coef;  // a0, slopes over phi, slope over nu (delta + 2)
    double nominal_demand = 0.0;
    double avg_abs_deviation = 0.0;
    double max_abs_deviation = 0.0;
    std::size_t rows_total = 0;
    std::size_t rows_kept = 0;
    double nu_axis_lo = 0.0;
    double nu_axis_hi = 0.0;

    double deviation_fraction() const {
        return nominal_demand != 0.0 ? avg_abs_deviation / nominal_demand : 0.0;
    }
    double eval(const std::vector<double>& phi, double nu) const;

    KvTree to_kv() const;
    static DemandSurrogate from_kv(const KvTree& t);
    void save_file(const std::string& path) const;
    static DemandSurrogate load_file(const std::string& path);
};

// Samples the true demand on a (phi, nu) grid, skipping nu values outside the
// exact limits, and fits the affine surrogate. The nu axis spans the extremes
// of the shifted limit planes over the limit box.
DemandSurrogate fit_demand(const RampingDerivation& d, const AffineLimitSet& limits,
                           const std::vector<VariableRange>& box,
                           const std::vector<int>& counts);

}  // namespace dynramp

#endif
