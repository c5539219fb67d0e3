#ifndef DYNRAMP_EXPR_HPP
#define DYNRAMP_EXPR_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dynramp {

// Scalar expression tree. Nodes are immutable and shared by reference, so
// repeated differentiation reuses common subtrees instead of copying them.
enum class ExprKind : std::uint8_t {
    Constant,
    Variable,
    Sum,       // binary a + b
    Product,   // binary a * b
    Quotient,  // binary a / b
    Power,     // a ^ b, right-associative in the grammar
    Exp,
    Ln,
    Neg,
};

using Binding = std::map<std::string, double>;

class EvalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

class Expr {
  public:
    Expr() : Expr(constant(0.0)) {}

    static Expr constant(double v);
    static Expr variable(const std::string& name);
    static Expr sum(Expr a, Expr b);
    static Expr product(Expr a, Expr b);
    static Expr quotient(Expr a, Expr b);
    static Expr power(Expr base, Expr exponent);
    static Expr exp(Expr a);
    static Expr ln(Expr a);
    static Expr neg(Expr a);

    ExprKind kind() const;
    double constant_value() const;           // Constant nodes only
    const std::string& variable_name() const;  // Variable nodes only
    std::size_t arity() const;
    Expr child(std::size_t i) const;

    bool is_constant(double v) const;

    double eval(const Binding& b) const;
    Expr diff(const std::string& var) const;
    Expr simplified() const;
    std::string str() const;

    // Structural equality on the tree (pointer-equal subtrees short-circuit).
    bool equals(const Expr& other) const;

    void collect_variables(std::set<std::string>& out) const;
    std::set<std::string> variables() const;

    // Replace named variables by constant nodes (parameter substitution).
    Expr substitute_constants(const std::map<std::string, double>& values) const;

    std::size_t node_count() const;  // distinct DAG nodes

    struct Node;
    const Node* raw() const { return node_.get(); }

    // Internal: wrap an existing node without copying (used by diff/simplify).
    static Expr adopt_node(std::shared_ptr<const Node> p);

  private:
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

inline Expr operator+(Expr a, Expr b) { return Expr::sum(std::move(a), std::move(b)); }
inline Expr operator-(Expr a, Expr b) { return Expr::sum(std::move(a), Expr::neg(std::move(b))); }
inline Expr operator*(Expr a, Expr b) { return Expr::product(std::move(a), std::move(b)); }
inline Expr operator/(Expr a, Expr b) { return Expr::quotient(std::move(a), std::move(b)); }
inline Expr operator-(Expr a) { return Expr::neg(std::move(a)); }

// Grammar: identifiers, decimal literals (with optional exponent part),
// + - * / ^, unary minus, exp(.), ln(.), parentheses. '^' is right-associative
// and unary minus binds tighter than the base of '^', so "-x^2" reads (-x)^2.
Expr parse_expression(std::string_view text);

// Flattened evaluation form. Shared subtrees become single tape slots, which
// keeps the CSTR2 alpha-chain cheap to evaluate in Newton/RK4 loops.
class CompiledExpr {
  public:
    CompiledExpr() = default;
    CompiledExpr(const Expr& e, const std::vector<std::string>& variable_order);

    double eval(const double* values) const;
    double eval(const std::vector<double>& values) const {
        return eval(values.data());
    }
    const std::vector<std::string>& variable_order() const { return vars_; }

  private:
    struct Op {
        ExprKind kind;
        std::int32_t a = -1;
        std::int32_t b = -1;
        double value = 0.0;  // Constant payload or variable slot
    };
    std::vector<Op> tape_;
    std::vector<std::string> vars_;
    mutable std::vector<double> stack_;
};

enum class ZeroStatus { NonZero, SymbolicZero, NumericZero };

struct VariableRange {
    double lo = 0.0;
    double hi = 1.0;
};
using VariableRanges = std::map<std::string, VariableRange>;

// Symbolic-first zero test with a deterministic 50-point probing fallback
// inside the declared ranges; probes use a fixed seed so results are stable.
ZeroStatus zero_status(const Expr& e, const VariableRanges& ranges);
inline bool is_identically_zero(const Expr& e, const VariableRanges& ranges) {
    return zero_status(e, ranges) != ZeroStatus::NonZero;
}

}  // namespace dynramp

#endif
