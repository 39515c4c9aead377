#include "ffl/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

#include "ffl/error.hpp"
#include "ffl/rational.hpp"

namespace ffl {

struct Expr::Node {
    Op op = Op::Const;
    double value = 0.0;  // Const
    int index = 0;       // Var index, or Pow exponent
    std::vector<Expr> kids;
};

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::make(Op op, std::vector<Expr> kids, double value, int index) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = value;
    n->index = index;
    n->kids = std::move(kids);
    return Expr(std::move(n));
}

Expr Expr::constant(double v) { return make(Op::Const, {}, v); }

Expr Expr::variable(int index) {
    if (index < 0) throw ValidationError("negative variable index");
    return make(Op::Var, {}, 0.0, index);
}

Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
int Expr::index() const { return node_->index; }
int Expr::exponent() const { return node_->index; }
std::span<const Expr> Expr::children() const { return node_->kids; }

namespace {
bool is_const(const Expr& e, double v) { return e.op() == Op::Const && e.value() == v; }
}  // namespace

// Constructors fold constants and drop neutral elements so derivative trees stay small.
Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() + b.value());
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    return Expr::make(Op::Add, {a, b});
}

Expr operator-(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() - b.value());
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return -b;
    return Expr::make(Op::Sub, {a, b});
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() * b.value());
    if (is_const(a, 0.0) || is_const(b, 0.0)) return Expr::constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    return Expr::make(Op::Mul, {a, b});
}

Expr operator/(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant() && b.value() != 0.0) return Expr::constant(a.value() / b.value());
    if (is_const(a, 0.0)) return Expr::constant(0.0);
    if (is_const(b, 1.0)) return a;
    return Expr::make(Op::Div, {a, b});
}

Expr operator-(const Expr& a) {
    if (a.is_constant()) return Expr::constant(-a.value());
    if (a.op() == Op::Neg) return a.children()[0];
    return Expr::make(Op::Neg, {a});
}

Expr pow(const Expr& a, int exponent) {
    if (exponent < 0) throw ValidationError("pow takes a natural exponent");
    if (exponent == 0) return Expr::constant(1.0);
    if (exponent == 1) return a;
    if (a.is_constant()) return Expr::constant(std::pow(a.value(), exponent));
    return Expr::make(Op::Pow, {a}, 0.0, exponent);
}

Expr sqrt(const Expr& a) {
    if (a.is_constant() && a.value() >= 0.0) return Expr::constant(std::sqrt(a.value()));
    return Expr::make(Op::Sqrt, {a});
}
Expr exp(const Expr& a) {
    if (a.is_constant()) return Expr::constant(std::exp(a.value()));
    return Expr::make(Op::Exp, {a});
}
Expr log(const Expr& a) {
    if (a.is_constant() && a.value() > 0.0) return Expr::constant(std::log(a.value()));
    return Expr::make(Op::Log, {a});
}
Expr sin(const Expr& a) {
    if (a.is_constant()) return Expr::constant(std::sin(a.value()));
    return Expr::make(Op::Sin, {a});
}
Expr cos(const Expr& a) {
    if (a.is_constant()) return Expr::constant(std::cos(a.value()));
    return Expr::make(Op::Cos, {a});
}

double Expr::eval(std::span<const double> p) const {
    const auto& n = *node_;
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var:
            if (static_cast<std::size_t>(n.index) >= p.size())
                throw ValidationError("expression variable x" + std::to_string(n.index) + " out of range");
            return p[n.index];
        case Op::Add: return n.kids[0].eval(p) + n.kids[1].eval(p);
        case Op::Sub: return n.kids[0].eval(p) - n.kids[1].eval(p);
        case Op::Mul: return n.kids[0].eval(p) * n.kids[1].eval(p);
        case Op::Div: return n.kids[0].eval(p) / n.kids[1].eval(p);
        case Op::Neg: return -n.kids[0].eval(p);
        case Op::Pow: {
            const double b = n.kids[0].eval(p);
            double r = 1.0;
            for (int i = 0; i < n.index; ++i) r *= b;
            return r;
        }
        case Op::Sqrt: return std::sqrt(n.kids[0].eval(p));
        case Op::Exp: return std::exp(n.kids[0].eval(p));
        case Op::Log: return std::log(n.kids[0].eval(p));
        case Op::Sin: return std::sin(n.kids[0].eval(p));
        case Op::Cos: return std::cos(n.kids[0].eval(p));
    }
    return 0.0;
}

Interval Expr::eval(std::span<const Interval> box) const {
    const auto& n = *node_;
    switch (n.op) {
        case Op::Const: return Interval(n.value);
        case Op::Var:
            if (static_cast<std::size_t>(n.index) >= box.size())
                throw ValidationError("expression variable x" + std::to_string(n.index) + " out of range");
            return box[n.index];
        case Op::Add: return n.kids[0].eval(box) + n.kids[1].eval(box);
        case Op::Sub: return n.kids[0].eval(box) - n.kids[1].eval(box);
        case Op::Mul: {
            // x*x on the same subtree is a square; keep it nonnegative.
            if (n.kids[0].node_ == n.kids[1].node_) return ffl::pow(n.kids[0].eval(box), 2);
            return n.kids[0].eval(box) * n.kids[1].eval(box);
        }
        case Op::Div: return n.kids[0].eval(box) / n.kids[1].eval(box);
        case Op::Neg: return -n.kids[0].eval(box);
        case Op::Pow: return ffl::pow(n.kids[0].eval(box), n.index);
        case Op::Sqrt: return ffl::sqrt(n.kids[0].eval(box));
        case Op::Exp: return ffl::exp(n.kids[0].eval(box));
        case Op::Log: return ffl::log(n.kids[0].eval(box));
        case Op::Sin: return ffl::sin(n.kids[0].eval(box));
        case Op::Cos: return ffl::cos(n.kids[0].eval(box));
    }
    return Interval(0.0);
}

Expr Expr::derivative(int var) const {
    const auto& n = *node_;
    switch (n.op) {
        case Op::Const: return constant(0.0);
        case Op::Var: return constant(n.index == var ? 1.0 : 0.0);
        case Op::Add: return n.kids[0].derivative(var) + n.kids[1].derivative(var);
        case Op::Sub: return n.kids[0].derivative(var) - n.kids[1].derivative(var);
        case Op::Mul: {
            const auto& u = n.kids[0];
            const auto& v = n.kids[1];
            return u.derivative(var) * v + u * v.derivative(var);
        }
        case Op::Div: {
            const auto& u = n.kids[0];
            const auto& v = n.kids[1];
            if (v.max_variable() < 0) return u.derivative(var) / v;
            return (u.derivative(var) * v - u * v.derivative(var)) / ffl::pow(v, 2);
        }
        case Op::Neg: return -n.kids[0].derivative(var);
        case Op::Pow: {
            const auto& u = n.kids[0];
            return constant(n.index) * ffl::pow(u, n.index - 1) * u.derivative(var);
        }
        case Op::Sqrt: return n.kids[0].derivative(var) / (constant(2.0) * *this);
        case Op::Exp: return *this * n.kids[0].derivative(var);
        case Op::Log: return n.kids[0].derivative(var) / n.kids[0];
        case Op::Sin: return ffl::cos(n.kids[0]) * n.kids[0].derivative(var);
        case Op::Cos: return -(ffl::sin(n.kids[0]) * n.kids[0].derivative(var));
    }
    return constant(0.0);
}

Expr Expr::substitute(std::span<const Expr> repl) const {
    const auto& n = *node_;
    switch (n.op) {
        case Op::Const: return *this;
        case Op::Var:
            if (static_cast<std::size_t>(n.index) < repl.size()) return repl[n.index];
            return *this;
        case Op::Add: return n.kids[0].substitute(repl) + n.kids[1].substitute(repl);
        case Op::Sub: return n.kids[0].substitute(repl) - n.kids[1].substitute(repl);
        case Op::Mul: return n.kids[0].substitute(repl) * n.kids[1].substitute(repl);
        case Op::Div: return n.kids[0].substitute(repl) / n.kids[1].substitute(repl);
        case Op::Neg: return -n.kids[0].substitute(repl);
        case Op::Pow: return ffl::pow(n.kids[0].substitute(repl), n.index);
        case Op::Sqrt: return ffl::sqrt(n.kids[0].substitute(repl));
        case Op::Exp: return ffl::exp(n.kids[0].substitute(repl));
        case Op::Log: return ffl::log(n.kids[0].substitute(repl));
        case Op::Sin: return ffl::sin(n.kids[0].substitute(repl));
        case Op::Cos: return ffl::cos(n.kids[0].substitute(repl));
    }
    return *this;
}

int Expr::max_variable() const {
    if (node_->op == Op::Var) return node_->index;
    int m = -1;
    for (const auto& k : node_->kids) m = std::max(m, k.max_variable());
    return m;
}

std::size_t Expr::node_count() const {
    std::size_t c = 1;
    for (const auto& k : node_->kids) c += k.node_count();
    return c;
}

namespace {

using Poly = std::vector<double>;

Poly poly_add(const Poly& a, const Poly& b, double sign) {
    Poly r(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) r[i] += sign * b[i];
    return r;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

Poly to_poly(const Expr& e, int var) {
    switch (e.op()) {
        case Op::Const: return {e.value()};
        case Op::Var:
            if (e.index() != var) throw ValidationError("polynomial must be univariate");
            return {0.0, 1.0};
        case Op::Add: return poly_add(to_poly(e.children()[0], var), to_poly(e.children()[1], var), 1.0);
        case Op::Sub: return poly_add(to_poly(e.children()[0], var), to_poly(e.children()[1], var), -1.0);
        case Op::Mul: return poly_mul(to_poly(e.children()[0], var), to_poly(e.children()[1], var));
        case Op::Neg: return poly_add({0.0}, to_poly(e.children()[0], var), -1.0);
        case Op::Div: {
            const auto& d = e.children()[1];
            if (d.max_variable() >= 0) throw ValidationError("division by a non-constant is not polynomial");
            Poly p = to_poly(e.children()[0], var);
            const double c = d.eval(std::span<const double>{});
            for (double& x : p) x /= c;
            return p;
        }
        case Op::Pow: {
            const Poly b = to_poly(e.children()[0], var);
            Poly r{1.0};
            for (int i = 0; i < e.exponent(); ++i) r = poly_mul(r, b);
            return r;
        }
        default: throw ValidationError("expression is not a polynomial");
    }
}

}  // namespace

std::vector<double> Expr::polynomial_coefficients(int var) const {
    Poly p = to_poly(*this, var);
    while (p.size() > 1 && p.back() == 0.0) p.pop_back();
    return p;
}

namespace {

const char* op_name(Op op) {
    switch (op) {
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::Neg: return "neg";
        case Op::Pow: return "pow";
        case Op::Sqrt: return "sqrt";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        default: return "";
    }
}

void print(const Expr& e, std::ostringstream& os) {
    switch (e.op()) {
        case Op::Const: {
            char buf[32];
            auto [p, ec] = std::to_chars(buf, buf + sizeof buf, e.value());
            os << std::string_view(buf, p - buf);
            return;
        }
        case Op::Var: os << "x" << e.index(); return;
        case Op::Pow:
            os << "(pow ";
            print(e.children()[0], os);
            os << ' ' << e.exponent() << ')';
            return;
        default:
            os << '(' << op_name(e.op());
            for (const auto& k : e.children()) {
                os << ' ';
                print(k, os);
            }
            os << ')';
    }
}

class Parser {
public:
    Parser(std::string_view text, std::span<const std::string> vars) : text_(text), vars_(vars) {}

    Expr parse_all() {
        Expr e = parse_term();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw ValidationError("expression parse error at offset " + std::to_string(pos_) + ": " + why + " in '" +
                              std::string(text_) + "'");
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    std::string_view token() {
        skip_ws();
        const auto start = pos_;
        while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
               !std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (start == pos_) fail("expected a token");
        return text_.substr(start, pos_ - start);
    }

    Expr atom(std::string_view tok) {
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (tok == vars_[i]) return Expr::variable(static_cast<int>(i));
        if (tok.size() > 1 && tok[0] == 'x' && std::isdigit(static_cast<unsigned char>(tok[1]))) {
            int idx = 0;
            auto [p, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), idx);
            if (ec == std::errc{} && p == tok.data() + tok.size()) return Expr::variable(idx);
        }
        if (tok == "pi") return Expr::constant(3.14159265358979323846);
        try {
            return Expr::constant(parse_number(tok).value);
        } catch (const ValidationError&) {
            fail("unknown symbol '" + std::string(tok) + "'");
        }
    }

    Expr parse_term() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        if (text_[pos_] != '(') return atom(token());
        ++pos_;
        const std::string name(token());
        std::vector<Expr> args;
        std::optional<int> exponent;
        while (true) {
            skip_ws();
            if (pos_ >= text_.size()) fail("missing ')'");
            if (text_[pos_] == ')') {
                ++pos_;
                break;
            }
            if (name == "pow" && args.size() == 1) {
                const auto tok = token();
                int n = 0;
                auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), n);
                if (ec != std::errc{} || p != tok.data() + tok.size() || n < 0)
                    fail("pow exponent must be a natural number");
                exponent = n;
                continue;
            }
            args.push_back(parse_term());
        }
        auto need = [&](std::size_t k) {
            if (args.size() != k) fail("'" + name + "' takes " + std::to_string(k) + " argument(s)");
        };
        auto fold = [&](auto combine) {
            if (args.size() < 2) fail("'" + name + "' takes at least two arguments");
            Expr acc = args[0];
            for (std::size_t i = 1; i < args.size(); ++i) acc = combine(acc, args[i]);
            return acc;
        };
        if (name == "add") return fold([](const Expr& a, const Expr& b) { return a + b; });
        if (name == "mul") return fold([](const Expr& a, const Expr& b) { return a * b; });
        if (name == "sub") {
            need(2);
            return args[0] - args[1];
        }
        if (name == "div") {
            need(2);
            return args[0] / args[1];
        }
        if (name == "neg") {
            need(1);
            return -args[0];
        }
        if (name == "pow") {
            need(1);
            if (!exponent) fail("pow needs an exponent");
            return pow(args[0], *exponent);
        }
        if (name == "sqrt") { need(1); return sqrt(args[0]); }
        if (name == "exp") { need(1); return exp(args[0]); }
        if (name == "log") { need(1); return log(args[0]); }
        if (name == "sin") { need(1); return sin(args[0]); }
        if (name == "cos") { need(1); return cos(args[0]); }
        fail("unknown operator '" + name + "'");
    }

    std::string_view text_;
    std::span<const std::string> vars_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string Expr::to_string() const {
    std::ostringstream os;
    print(*this, os);
    return os.str();
}

Expr Expr::parse(std::string_view text, std::span<const std::string> variables) {
    return Parser(text, variables).parse_all();
}

Expr Expr::parse(std::string_view text) {
    static const std::string names[] = {"x", "y", "z"};
    return parse(text, names);
}

}  // namespace ffl
