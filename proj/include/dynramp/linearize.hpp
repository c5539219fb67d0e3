#ifndef DYNRAMP_LINEARIZE_HPP
#define DYNRAMP_LINEARIZE_HPP

#include <optional>
#include <string>
#include <vector>

#include "dynramp/expr.hpp"
#include "dynramp/model.hpp"

namespace dynramp {

class DerivationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class RelativeDegreeMismatch : public DerivationError {
  public:
    using DerivationError::DerivationError;
};
class DegenerateOutput : public DerivationError {
  public:
    using DerivationError::DerivationError;
};
class SignFlip : public DerivationError {
  public:
    using DerivationError::DerivationError;
};
class SingularJacobian : public DerivationError {
  public:
    using DerivationError::DerivationError;
};
class NoConvergence : public DerivationError {
  public:
    using DerivationError::DerivationError;
};
class OutOfRange : public DerivationError {
  public:
    using DerivationError::DerivationError;
};
class OutOfRampRange : public DerivationError {
  public:
    using DerivationError::DerivationError;
};

// Values of (rho, rho_d1, ..., rho_d{delta-1}); empty when delta == 0.
struct RampingState {
    std::vector<double> phi;
};

struct NuLimits {
    double nu_min = 0.0;
    double nu_max = 0.0;
};

// Result of the chain of output differentiations: y^(n) splits into
// alpha_n + beta_u * u + beta_rho * nu with nu = rho^(delta).
class RampingDerivation {
  public:
    ProcessModel model;
    int relative_degree = 0;             // equals dim(x) by construction
    int delta = 0;                       // ramping order
    std::vector<std::string> phi_names;  // rho ... rho_d{delta-1}
    std::vector<Expr> alpha;             // alpha_0 .. alpha_n
    Expr beta_u;
    Expr beta_rho;
    std::vector<std::vector<Expr>> jacobian;  // d alpha_k / d x_i, n x n
    Expr det_jacobian;

    bool beta_same_sign = true;   // sign(beta_u) == sign(beta_rho) over the box
    double beta_u_sign = 0.0;     // sign at the nominal point
    double beta_rho_sign = 0.0;
    double det_at_nominal = 0.0;
    bool input_test_numeric = false;  // zero test needed the probing fallback

    // Prepares compiled forms; called by derive()/load. Idempotent.
    void compile();

    // Variable layout used by compiled evaluation: states then phi components.
    std::size_t n_states() const { return model.states.size(); }
    std::vector<double> pack(const std::vector<double>& x, const RampingState& phi) const;

    double eval_alpha(std::size_t k, const std::vector<double>& packed) const;
    double eval_beta_u(const std::vector<double>& packed) const;
    double eval_beta_rho(const std::vector<double>& packed) const;
    double eval_det_jacobian(const std::vector<double>& packed) const;

    // Newton solve of alpha(x, phi) = (y_nom, 0, ..., 0) for the state x.
    std::vector<double> solve_gamma(const RampingState& phi,
                                    const std::vector<double>& guess) const;
    std::vector<double> solve_gamma(const RampingState& phi) const;

    NuLimits nu_limits_exact(const RampingState& phi) const;
    NuLimits nu_limits_exact(const RampingState& phi, const std::vector<double>& x) const;

    double feedforward_u(const RampingState& phi, double nu) const;
    double feedforward_u(const RampingState& phi, double nu,
                         const std::vector<double>& x) const;

    std::string report() const;

    KvTree to_kv() const;
    static RampingDerivation from_kv(const KvTree& t);
    void save_file(const std::string& path) const;
    static RampingDerivation load_file(const std::string& path);

  private:
    std::vector<std::string> packed_order_;
    std::vector<CompiledExpr> c_alpha_;
    CompiledExpr c_beta_u_, c_beta_rho_, c_det_;
    std::vector<std::vector<CompiledExpr>> c_jac_;
    bool compiled_ = false;
};

RampingDerivation derive(const ProcessModel& model);

// RK4 right-hand side helper shared by the verification simulator.
class CompiledDynamics {
  public:
    explicit CompiledDynamics(const ProcessModel& m);
    // dy/dt for state vector x at production rate rho and input u.
    void rhs(const std::vector<double>& x, double rho, double u,
             std::vector<double>& out) const;
    double demand(const std::vector<double>& x, double rho, double u) const;

  private:
    std::vector<CompiledExpr> f1_, f2u_, f2rho_;
    CompiledExpr demand_;
    std::size_t n_;
    mutable std::vector<double> packed_;
};

}  // namespace dynramp

#endif
