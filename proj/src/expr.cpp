#include "dynramp/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>
#include <unordered_map>

namespace dynramp {

struct Expr::Node {
    ExprKind kind;
    double value = 0.0;
    std::string name;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_node(ExprKind k, double v, std::string name, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = k;
    n->value = v;
    n->name = std::move(name);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

}  // namespace

Expr Expr::constant(double v) {
    return Expr(make_node(ExprKind::Constant, v, {}, nullptr, nullptr));
}
Expr Expr::variable(const std::string& name) {
    return Expr(make_node(ExprKind::Variable, 0.0, name, nullptr, nullptr));
}
Expr Expr::sum(Expr a, Expr b) {
    return Expr(make_node(ExprKind::Sum, 0.0, {}, a.node_, b.node_));
}
Expr Expr::product(Expr a, Expr b) {
    return Expr(make_node(ExprKind::Product, 0.0, {}, a.node_, b.node_));
}
Expr Expr::quotient(Expr a, Expr b) {
    return Expr(make_node(ExprKind::Quotient, 0.0, {}, a.node_, b.node_));
}
Expr Expr::power(Expr base, Expr exponent) {
    return Expr(make_node(ExprKind::Power, 0.0, {}, base.node_, exponent.node_));
}
Expr Expr::exp(Expr a) { return Expr(make_node(ExprKind::Exp, 0.0, {}, a.node_, nullptr)); }
Expr Expr::ln(Expr a) { return Expr(make_node(ExprKind::Ln, 0.0, {}, a.node_, nullptr)); }
Expr Expr::neg(Expr a) { return Expr(make_node(ExprKind::Neg, 0.0, {}, a.node_, nullptr)); }

ExprKind Expr::kind() const { return node_->kind; }
double Expr::constant_value() const { return node_->value; }
const std::string& Expr::variable_name() const { return node_->name; }

std::size_t Expr::arity() const {
    switch (node_->kind) {
        case ExprKind::Constant:
        case ExprKind::Variable: return 0;
        case ExprKind::Exp:
        case ExprKind::Ln:
        case ExprKind::Neg: return 1;
        default: return 2;
    }
}

Expr Expr::child(std::size_t i) const {
    return Expr(i == 0 ? node_->a : node_->b);
}

bool Expr::is_constant(double v) const {
    return node_->kind == ExprKind::Constant && node_->value == v;
}

namespace {

double pow_checked(double base, double exponent) {
    if (base == 0.0 && exponent < 0.0) throw EvalError("0 raised to a negative power");
    if (base < 0.0) {
        if (exponent != std::round(exponent))
            throw EvalError("negative base with non-integer exponent");
    }
    return std::pow(base, exponent);
}

double eval_node(const Expr::Node* n, const Binding& b,
                 std::unordered_map<const Expr::Node*, double>& memo) {
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    double r = 0.0;
    switch (n->kind) {
        case ExprKind::Constant: r = n->value; break;
        case ExprKind::Variable: {
            auto v = b.find(n->name);
            if (v == b.end()) throw EvalError("unbound variable '" + n->name + "'");
            r = v->second;
            break;
        }
        case ExprKind::Sum:
            r = eval_node(n->a.get(), b, memo) + eval_node(n->b.get(), b, memo);
            break;
        case ExprKind::Product:
            r = eval_node(n->a.get(), b, memo) * eval_node(n->b.get(), b, memo);
            break;
        case ExprKind::Quotient: {
            double den = eval_node(n->b.get(), b, memo);
            if (den == 0.0) throw EvalError("division by zero");
            r = eval_node(n->a.get(), b, memo) / den;
            break;
        }
        case ExprKind::Power:
            r = pow_checked(eval_node(n->a.get(), b, memo), eval_node(n->b.get(), b, memo));
            break;
        case ExprKind::Exp: r = std::exp(eval_node(n->a.get(), b, memo)); break;
        case ExprKind::Ln: {
            double x = eval_node(n->a.get(), b, memo);
            if (x <= 0.0) throw EvalError("ln of non-positive argument");
            r = std::log(x);
            break;
        }
        case ExprKind::Neg: r = -eval_node(n->a.get(), b, memo); break;
    }
    memo.emplace(n, r);
    return r;
}

}  // namespace

double Expr::eval(const Binding& b) const {
    std::unordered_map<const Node*, double> memo;
    return eval_node(node_.get(), b, memo);
}

namespace {

Expr from_node(const NodePtr& n);

Expr diff_node(const NodePtr& n, const std::string& var,
               std::unordered_map<const Expr::Node*, Expr>& memo) {
    auto it = memo.find(n.get());
    if (it != memo.end()) return it->second;
    Expr r;
    switch (n->kind) {
        case ExprKind::Constant: r = Expr::constant(0.0); break;
        case ExprKind::Variable:
            r = Expr::constant(n->name == var ? 1.0 : 0.0);
            break;
        case ExprKind::Sum:
            r = diff_node(n->a, var, memo) + diff_node(n->b, var, memo);
            break;
        case ExprKind::Product: {
            Expr a = from_node(n->a), b = from_node(n->b);
            r = diff_node(n->a, var, memo) * b + a * diff_node(n->b, var, memo);
            break;
        }
        case ExprKind::Quotient: {
            Expr a = from_node(n->a), b = from_node(n->b);
            r = (diff_node(n->a, var, memo) * b - a * diff_node(n->b, var, memo)) /
                Expr::power(b, Expr::constant(2.0));
            break;
        }
        case ExprKind::Power: {
            Expr base = from_node(n->a), expo = from_node(n->b);
            Expr dbase = diff_node(n->a, var, memo);
            if (n->b->kind == ExprKind::Constant) {
                // d(f^c) = c * f^(c-1) * f', valid for negative bases too
                double c = n->b->value;
                r = Expr::constant(c) *
                    Expr::power(base, Expr::constant(c - 1.0)) * dbase;
            } else {
                Expr dexpo = diff_node(n->b, var, memo);
                r = Expr::power(base, expo) *
                    (dexpo * Expr::ln(base) + expo * dbase / base);
            }
            break;
        }
        case ExprKind::Exp:
            r = Expr::exp(from_node(n->a)) * diff_node(n->a, var, memo);
            break;
        case ExprKind::Ln:
            r = diff_node(n->a, var, memo) / from_node(n->a);
            break;
        case ExprKind::Neg:
            r = Expr::neg(diff_node(n->a, var, memo));
            break;
    }
    memo.emplace(n.get(), r);
    return r;
}

}  // namespace

Expr Expr::adopt_node(std::shared_ptr<const Node> p) { return Expr(std::move(p)); }

namespace {
Expr from_node(const NodePtr& n) { return Expr::adopt_node(n); }
}  // namespace

std::size_t Expr::node_count() const {
    std::set<const Node*> seen;
    std::vector<const Node*> stack{node_.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second) continue;
        if (n->a) stack.push_back(n->a.get());
        if (n->b) stack.push_back(n->b.get());
    }
    return seen.size();
}

Expr Expr::diff(const std::string& var) const {
    std::unordered_map<const Node*, Expr> memo;
    return diff_node(node_, var, memo);
}

bool Expr::equals(const Expr& other) const {
    const Node* x = node_.get();
    const Node* y = other.node_.get();
    if (x == y) return true;
    if (x->kind != y->kind) return false;
    switch (x->kind) {
        case ExprKind::Constant: return x->value == y->value;
        case ExprKind::Variable: return x->name == y->name;
        default: break;
    }
    if (arity() == 1) return child(0).equals(other.child(0));
    return child(0).equals(other.child(0)) && child(1).equals(other.child(1));
}

void Expr::collect_variables(std::set<std::string>& out) const {
    std::set<const Node*> seen;
    std::vector<const Node*> stack{node_.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second) continue;
        if (n->kind == ExprKind::Variable) out.insert(n->name);
        if (n->a) stack.push_back(n->a.get());
        if (n->b) stack.push_back(n->b.get());
    }
}

std::set<std::string> Expr::variables() const {
    std::set<std::string> out;
    collect_variables(out);
    return out;
}

namespace {

Expr substitute_node(const NodePtr& n, const std::map<std::string, double>& values,
                     std::unordered_map<const Expr::Node*, Expr>& memo) {
    auto it = memo.find(n.get());
    if (it != memo.end()) return it->second;
    Expr r;
    switch (n->kind) {
        case ExprKind::Constant: r = Expr::adopt_node(n); break;
        case ExprKind::Variable: {
            auto v = values.find(n->name);
            r = (v == values.end()) ? Expr::adopt_node(n) : Expr::constant(v->second);
            break;
        }
        case ExprKind::Sum:
            r = substitute_node(n->a, values, memo) + substitute_node(n->b, values, memo);
            break;
        case ExprKind::Product:
            r = substitute_node(n->a, values, memo) * substitute_node(n->b, values, memo);
            break;
        case ExprKind::Quotient:
            r = substitute_node(n->a, values, memo) / substitute_node(n->b, values, memo);
            break;
        case ExprKind::Power:
            r = Expr::power(substitute_node(n->a, values, memo),
                            substitute_node(n->b, values, memo));
            break;
        case ExprKind::Exp: r = Expr::exp(substitute_node(n->a, values, memo)); break;
        case ExprKind::Ln: r = Expr::ln(substitute_node(n->a, values, memo)); break;
        case ExprKind::Neg: r = Expr::neg(substitute_node(n->a, values, memo)); break;
    }
    memo.emplace(n.get(), r);
    return r;
}

}  // namespace

Expr Expr::substitute_constants(const std::map<std::string, double>& values) const {
    std::unordered_map<const Node*, Expr> memo;
    return substitute_node(node_, values, memo);
}

namespace {

bool fold_constant(ExprKind k, const Expr& a, const Expr& b, double& out) {
    if (a.kind() != ExprKind::Constant) return false;
    double x = a.constant_value();
    double y = 0.0;
    if (k == ExprKind::Sum || k == ExprKind::Product || k == ExprKind::Quotient ||
        k == ExprKind::Power) {
        if (b.kind() != ExprKind::Constant) return false;
        y = b.constant_value();
    }
    switch (k) {
        case ExprKind::Sum: out = x + y; return true;
        case ExprKind::Product: out = x * y; return true;
        case ExprKind::Quotient:
            if (y == 0.0) return false;  // keep the domain error for eval time
            out = x / y;
            return true;
        case ExprKind::Power:
            if (x == 0.0 && y < 0.0) return false;
            if (x < 0.0 && y != std::round(y)) return false;
            out = std::pow(x, y);
            return true;
        case ExprKind::Exp: out = std::exp(x); return true;
        case ExprKind::Ln:
            if (x <= 0.0) return false;
            out = std::log(x);
            return true;
        case ExprKind::Neg: out = -x; return true;
        default: return false;
    }
}

Expr simplify_node(const NodePtr& n, std::unordered_map<const Expr::Node*, Expr>& memo) {
    auto it = memo.find(n.get());
    if (it != memo.end()) return it->second;
    Expr r;
    const ExprKind k = n->kind;
    if (k == ExprKind::Constant || k == ExprKind::Variable) {
        r = Expr::adopt_node(n);
        memo.emplace(n.get(), r);
        return r;
    }
    Expr a = simplify_node(n->a, memo);
    Expr b = n->b ? simplify_node(n->b, memo) : Expr();
    double folded;
    if (n->b ? fold_constant(k, a, b, folded)
             : fold_constant(k, a, a, folded)) {
        r = Expr::constant(folded);
        memo.emplace(n.get(), r);
        return r;
    }
    switch (k) {
        case ExprKind::Sum:
            if (a.is_constant(0.0)) r = b;
            else if (b.is_constant(0.0)) r = a;
            else if (b.kind() == ExprKind::Neg && a.equals(b.child(0)))
                r = Expr::constant(0.0);  // e - e
            else if (a.kind() == ExprKind::Neg && b.equals(a.child(0)))
                r = Expr::constant(0.0);
            else r = Expr::sum(a, b);
            break;
        case ExprKind::Product:
            if (a.is_constant(0.0) || b.is_constant(0.0)) r = Expr::constant(0.0);
            else if (a.is_constant(1.0)) r = b;
            else if (b.is_constant(1.0)) r = a;
            else r = Expr::product(a, b);
            break;
        case ExprKind::Quotient:
            if (b.is_constant(1.0)) r = a;
            else if (a.is_constant(0.0) && !b.is_constant(0.0))
                r = Expr::constant(0.0);
            else r = Expr::quotient(a, b);
            break;
        case ExprKind::Power:
            if (b.is_constant(1.0)) r = a;
            else if (b.is_constant(0.0)) r = Expr::constant(1.0);
            else if (a.is_constant(1.0)) r = Expr::constant(1.0);
            else r = Expr::power(a, b);
            break;
        case ExprKind::Exp:
            if (a.is_constant(0.0)) r = Expr::constant(1.0);
            else r = Expr::exp(a);
            break;
        case ExprKind::Ln:
            if (a.is_constant(1.0)) r = Expr::constant(0.0);
            else r = Expr::ln(a);
            break;
        case ExprKind::Neg:
            if (a.kind() == ExprKind::Neg) r = a.child(0);
            else r = Expr::neg(a);
            break;
        default:
            r = Expr::adopt_node(n);
            break;
    }
    memo.emplace(n.get(), r);
    return r;
}

}  // namespace

Expr Expr::simplified() const {
    std::unordered_map<const Node*, Expr> memo;
    return simplify_node(node_, memo);
}

namespace {

// Precedence levels for printing: sum 1, product 2, unary minus 3, power 4.
void print_node(const Expr& e, int parent_prec, std::string& out) {
    switch (e.kind()) {
        case ExprKind::Constant: {
            char buf[40];
            double v = e.constant_value();
            if (v < 0.0) {
                std::snprintf(buf, sizeof buf, "%.17g", v);
                if (parent_prec > 1) {
                    out += '(';
                    out += buf;
                    out += ')';
                } else {
                    out += buf;
                }
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", v);
                out += buf;
            }
            break;
        }
        case ExprKind::Variable: out += e.variable_name(); break;
        case ExprKind::Sum: {
            bool paren = parent_prec > 1;
            if (paren) out += '(';
            print_node(e.child(0), 1, out);
            Expr rhs = e.child(1);
            if (rhs.kind() == ExprKind::Neg) {
                out += " - ";
                print_node(rhs.child(0), 2, out);
            } else if (rhs.kind() == ExprKind::Constant && rhs.constant_value() < 0.0) {
                out += " - ";
                print_node(Expr::constant(-rhs.constant_value()), 2, out);
            } else {
                out += " + ";
                print_node(rhs, 1, out);
            }
            if (paren) out += ')';
            break;
        }
        case ExprKind::Product: {
            bool paren = parent_prec > 2;
            if (paren) out += '(';
            print_node(e.child(0), 2, out);
            out += "*";
            print_node(e.child(1), 3, out);
            if (paren) out += ')';
            break;
        }
        case ExprKind::Quotient: {
            bool paren = parent_prec > 2;
            if (paren) out += '(';
            print_node(e.child(0), 2, out);
            out += "/";
            print_node(e.child(1), 3, out);
            if (paren) out += ')';
            break;
        }
        case ExprKind::Power: {
            bool paren = parent_prec > 4;
            if (paren) out += '(';
            print_node(e.child(0), 5, out);  // base: parens around compounds
            out += "^";
            print_node(e.child(1), 4, out);  // right-assoc
            if (paren) out += ')';
            break;
        }
        case ExprKind::Exp:
            out += "exp(";
            print_node(e.child(0), 0, out);
            out += ')';
            break;
        case ExprKind::Ln:
            out += "ln(";
            print_node(e.child(0), 0, out);
            out += ')';
            break;
        case ExprKind::Neg: {
            bool paren = parent_prec > 3;
            if (paren) out += '(';
            out += '-';
            print_node(e.child(0), 4, out);
            if (paren) out += ')';
            break;
        }
    }
}

}  // namespace

std::string Expr::str() const {
    std::string out;
    print_node(*this, 0, out);
    return out;
}

// ----------------------------------------------------------------------------
// Parser

namespace {

class Parser {
  public:
    explicit Parser(std::string_view s) : s_(s) {}

    Expr parse() {
        Expr e = parse_sum();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return e;
    }

  private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    Expr parse_sum() {
        Expr e = parse_term();
        for (;;) {
            if (eat('+')) e = e + parse_term();
            else if (eat('-')) e = e - parse_term();
            else return e;
        }
    }

    Expr parse_term() {
        Expr e = parse_factor();
        for (;;) {
            if (eat('*')) e = e * parse_factor();
            else if (eat('/')) e = e / parse_factor();
            else return e;
        }
    }

    // factor := base ('^' factor)?   with base := '-' base | primary
    // Right-associative '^'; unary minus binds tighter than the '^' base.
    Expr parse_factor() {
        Expr base = parse_base();
        if (eat('^')) return Expr::power(base, parse_factor());
        return base;
    }

    Expr parse_base() {
        if (eat('-')) return Expr::neg(parse_base());
        return parse_primary();
    }

    Expr parse_primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_sum();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string ident = parse_identifier();
            if (peek() == '(') {
                eat('(');
                Expr arg = parse_sum();
                if (!eat(')')) fail("expected ')' after function argument");
                if (ident == "exp") return Expr::exp(arg);
                if (ident == "ln") return Expr::ln(arg);
                fail("unknown function '" + ident + "'");
            }
            return Expr::variable(ident);
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    Expr parse_number() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            } else {
                pos_ = mark;  // 'e' belongs to an identifier, not this literal
            }
        }
        if (pos_ == start) fail("expected number");
        std::string text(s_.substr(start, pos_ - start));
        try {
            return Expr::constant(std::stod(text));
        } catch (const std::exception&) {
            pos_ = start;
            fail("invalid numeric literal '" + text + "'");
        }
    }

    std::string parse_identifier() {
        std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        return std::string(s_.substr(start, pos_ - start));
    }
};

}  // namespace

Expr parse_expression(std::string_view text) { return Parser(text).parse(); }

// ----------------------------------------------------------------------------
// Compiled tape

CompiledExpr::CompiledExpr(const Expr& e, const std::vector<std::string>& variable_order)
    : vars_(variable_order) {
    std::unordered_map<std::string, std::int32_t> slot;
    for (std::size_t i = 0; i < vars_.size(); ++i) slot[vars_[i]] = static_cast<std::int32_t>(i);

    std::unordered_map<const Expr::Node*, std::int32_t> index;
    // Iterative post-order over the DAG.
    struct Frame {
        Expr e;
        bool expanded;
    };
    std::vector<Frame> stack{{e, false}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        const Expr::Node* n = f.e.raw();
        if (index.count(n)) continue;
        if (!f.expanded) {
            stack.push_back({f.e, true});
            for (std::size_t i = 0; i < f.e.arity(); ++i) stack.push_back({f.e.child(i), false});
            continue;
        }
        Op op;
        op.kind = f.e.kind();
        switch (f.e.kind()) {
            case ExprKind::Constant: op.value = f.e.constant_value(); break;
            case ExprKind::Variable: {
                auto it = slot.find(f.e.variable_name());
                if (it == slot.end())
                    throw EvalError("variable '" + f.e.variable_name() +
                                    "' not in compile order");
                op.value = static_cast<double>(it->second);
                break;
            }
            default:
                op.a = index.at(f.e.child(0).raw());
                if (f.e.arity() == 2) op.b = index.at(f.e.child(1).raw());
                break;
        }
        index[n] = static_cast<std::int32_t>(tape_.size());
        tape_.push_back(op);
    }
    stack_.resize(tape_.size());
}

double CompiledExpr::eval(const double* values) const {
    double* st = stack_.data();
    for (std::size_t i = 0; i < tape_.size(); ++i) {
        const Op& op = tape_[i];
        switch (op.kind) {
            case ExprKind::Constant: st[i] = op.value; break;
            case ExprKind::Variable: st[i] = values[static_cast<std::size_t>(op.value)]; break;
            case ExprKind::Sum: st[i] = st[op.a] + st[op.b]; break;
            case ExprKind::Product: st[i] = st[op.a] * st[op.b]; break;
            case ExprKind::Quotient:
                if (st[op.b] == 0.0) throw EvalError("division by zero");
                st[i] = st[op.a] / st[op.b];
                break;
            case ExprKind::Power: st[i] = pow_checked(st[op.a], st[op.b]); break;
            case ExprKind::Exp: st[i] = std::exp(st[op.a]); break;
            case ExprKind::Ln:
                if (st[op.a] <= 0.0) throw EvalError("ln of non-positive argument");
                st[i] = std::log(st[op.a]);
                break;
            case ExprKind::Neg: st[i] = -st[op.a]; break;
        }
    }
    return st[tape_.size() - 1];
}

// ----------------------------------------------------------------------------
// Zero test

ZeroStatus zero_status(const Expr& e, const VariableRanges& ranges) {
    Expr s = e.simplified();
    if (s.kind() == ExprKind::Constant)
        return s.constant_value() == 0.0 ? ZeroStatus::SymbolicZero : ZeroStatus::NonZero;

    std::mt19937 rng(0x5eedu);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto vars = s.variables();
    for (int trial = 0; trial < 50; ++trial) {
        Binding b;
        for (const auto& v : vars) {
            auto it = ranges.find(v);
            double lo = 0.1, hi = 2.0;
            if (it != ranges.end()) {
                lo = it->second.lo;
                hi = it->second.hi;
            }
            b[v] = lo + (hi - lo) * unit(rng);
        }
        double val;
        try {
            val = s.eval(b);
        } catch (const EvalError&) {
            return ZeroStatus::NonZero;  // cannot certify on a domain error
        }
        if (std::abs(val) > 1e-10) return ZeroStatus::NonZero;
    }
    return ZeroStatus::NumericZero;
}

}  // namespace dynramp
