#include "ptqm/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <utility>

namespace ptqm {

namespace {
constexpr std::int64_t kMaxExponent = 1000000000; // parser/constructor cap
constexpr double kPi = 3.14159265358979323846;
} // namespace

struct Expr::Node {
    Kind kind = Kind::Constant;
    double value = 0.0;       // Constant
    int var = 0;              // Variable (1-based)
    std::int64_t expo = 0;    // IntPow
    Func fn = Func::Sin;      // Func
    NodePtr a;                // left / only child
    NodePtr b;                // right child
    int max_var = 0;          // cached max variable index in subtree
};

// ---------------------------------------------------------------------------
// construction

Expr Expr::constant(double value) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->value = value;
    return Expr(std::move(n));
}

Expr Expr::variable(int index) {
    if (index < 1) throw ArityError("variable index must be >= 1, got " + std::to_string(index));
    auto n = std::make_shared<Node>();
    n->kind = Kind::Variable;
    n->var = index;
    n->max_var = index;
    return Expr(std::move(n));
}

namespace {
int max_var_of(const std::shared_ptr<const Expr::Node>& n) { return n ? n->max_var : 0; }
} // namespace

Expr Expr::add(Expr a, Expr b) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Add;
    n->a = a.node_;
    n->b = b.node_;
    n->max_var = std::max(max_var_of(n->a), max_var_of(n->b));
    return Expr(std::move(n));
}

Expr Expr::sub(Expr a, Expr b) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Sub;
    n->a = a.node_;
    n->b = b.node_;
    n->max_var = std::max(max_var_of(n->a), max_var_of(n->b));
    return Expr(std::move(n));
}

Expr Expr::mul(Expr a, Expr b) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Mul;
    n->a = a.node_;
    n->b = b.node_;
    n->max_var = std::max(max_var_of(n->a), max_var_of(n->b));
    return Expr(std::move(n));
}

Expr Expr::div(Expr a, Expr b) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Div;
    n->a = a.node_;
    n->b = b.node_;
    n->max_var = std::max(max_var_of(n->a), max_var_of(n->b));
    return Expr(std::move(n));
}

Expr Expr::neg(Expr a) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Neg;
    n->a = a.node_;
    n->max_var = max_var_of(n->a);
    return Expr(std::move(n));
}

Expr Expr::int_pow(Expr base, std::int64_t exponent) {
    if (exponent > kMaxExponent || exponent < -kMaxExponent)
        throw ConfigError("integer exponent out of range: " + std::to_string(exponent));
    auto n = std::make_shared<Node>();
    n->kind = Kind::IntPow;
    n->a = base.node_;
    n->expo = exponent;
    n->max_var = max_var_of(n->a);
    return Expr(std::move(n));
}

Expr Expr::apply(Func f, Expr a) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Func;
    n->fn = f;
    n->a = a.node_;
    n->max_var = max_var_of(n->a);
    return Expr(std::move(n));
}

Expr::Kind Expr::kind() const { return node_->kind; }
int Expr::max_variable() const { return node_->max_var; }
double Expr::constant_value() const { return node_->value; }
int Expr::variable_index() const { return node_->var; }
std::int64_t Expr::exponent() const { return node_->expo; }
Expr::Func Expr::func() const { return node_->fn; }
Expr Expr::child(int which) const { return Expr(which == 0 ? node_->a : node_->b); }

const char* Expr::func_name(Func f) {
    switch (f) {
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Tan: return "tan";
        case Func::Sinh: return "sinh";
        case Func::Cosh: return "cosh";
        case Func::Tanh: return "tanh";
        case Func::Exp: return "exp";
        case Func::Log: return "log";
        case Func::Sqrt: return "sqrt";
        case Func::Asinh: return "asinh";
        case Func::Atan: return "atan";
    }
    return "?";
}

bool Expr::equals(const Expr& other) const {
    const Node* x = node_.get();
    const Node* y = other.node_.get();
    if (x == y) return true;
    if (x->kind != y->kind) return false;
    switch (x->kind) {
        case Kind::Constant: return x->value == y->value;
        case Kind::Variable: return x->var == y->var;
        case Kind::IntPow:
            return x->expo == y->expo && Expr(x->a).equals(Expr(y->a));
        case Kind::Func:
            return x->fn == y->fn && Expr(x->a).equals(Expr(y->a));
        case Kind::Neg:
            return Expr(x->a).equals(Expr(y->a));
        default:
            return Expr(x->a).equals(Expr(y->a)) && Expr(x->b).equals(Expr(y->b));
    }
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

double pow_int(double base, std::int64_t k) {
    bool invert = k < 0;
    std::uint64_t e = invert ? static_cast<std::uint64_t>(-(k + 1)) + 1 : static_cast<std::uint64_t>(k);
    double result = 1.0;
    double acc = base;
    while (e) {
        if (e & 1) result *= acc;
        acc *= acc;
        e >>= 1;
    }
    return invert ? 1.0 / result : result;
}

} // namespace

double Expr::eval(const std::vector<double>& point) const {
    const Node* n = node_.get();
    switch (n->kind) {
        case Kind::Constant:
            return n->value;
        case Kind::Variable:
            if (n->var > static_cast<int>(point.size()))
                throw ArityError("point has " + std::to_string(point.size()) +
                                 " coordinates but expression uses x" + std::to_string(n->var));
            return point[static_cast<std::size_t>(n->var - 1)];
        case Kind::Add:
            return Expr(n->a).eval(point) + Expr(n->b).eval(point);
        case Kind::Sub:
            return Expr(n->a).eval(point) - Expr(n->b).eval(point);
        case Kind::Mul:
            return Expr(n->a).eval(point) * Expr(n->b).eval(point);
        case Kind::Div: {
            double num = Expr(n->a).eval(point);
            double den = Expr(n->b).eval(point);
            if (den == 0.0) throw DomainError(print(), point, "division by zero");
            return num / den;
        }
        case Kind::Neg:
            return -Expr(n->a).eval(point);
        case Kind::IntPow: {
            double base = Expr(n->a).eval(point);
            if (base == 0.0 && n->expo < 0)
                throw DomainError(print(), point, "zero raised to a negative power");
            return pow_int(base, n->expo);
        }
        case Kind::Func: {
            double arg = Expr(n->a).eval(point);
            switch (n->fn) {
                case Func::Sin: return std::sin(arg);
                case Func::Cos: return std::cos(arg);
                case Func::Tan: return std::tan(arg);
                case Func::Sinh: return std::sinh(arg);
                case Func::Cosh: return std::cosh(arg);
                case Func::Tanh: return std::tanh(arg);
                case Func::Exp: return std::exp(arg);
                case Func::Log:
                    if (arg <= 0.0) throw DomainError(print(), point, "log of non-positive value");
                    return std::log(arg);
                case Func::Sqrt:
                    if (arg < 0.0) throw DomainError(print(), point, "sqrt of negative value");
                    return std::sqrt(arg);
                case Func::Asinh: return std::asinh(arg);
                case Func::Atan: return std::atan(arg);
            }
            break;
        }
    }
    throw Error("corrupt expression node");
}

// ---------------------------------------------------------------------------
// differentiation

Expr Expr::derive(int var) const {
    if (var < 1) throw ArityError("derivative variable index must be >= 1");
    const Node* n = node_.get();
    const auto d = [var](const NodePtr& p) { return Expr(p).derive(var); };
    Expr result = constant(0.0);
    switch (n->kind) {
        case Kind::Constant:
            result = constant(0.0);
            break;
        case Kind::Variable:
            result = constant(n->var == var ? 1.0 : 0.0);
            break;
        case Kind::Add:
            result = d(n->a) + d(n->b);
            break;
        case Kind::Sub:
            result = d(n->a) - d(n->b);
            break;
        case Kind::Mul:
            result = d(n->a) * Expr(n->b) + Expr(n->a) * d(n->b);
            break;
        case Kind::Div:
            result = (d(n->a) * Expr(n->b) - Expr(n->a) * d(n->b)) / int_pow(Expr(n->b), 2);
            break;
        case Kind::Neg:
            result = -d(n->a);
            break;
        case Kind::IntPow:
            if (n->expo == 0) {
                result = constant(0.0);
            } else {
                result = constant(static_cast<double>(n->expo)) *
                         int_pow(Expr(n->a), n->expo - 1) * d(n->a);
            }
            break;
        case Kind::Func: {
            Expr arg(n->a);
            Expr inner = d(n->a);
            switch (n->fn) {
                case Func::Sin: result = apply(Func::Cos, arg) * inner; break;
                case Func::Cos: result = -(apply(Func::Sin, arg) * inner); break;
                case Func::Tan: result = inner / int_pow(apply(Func::Cos, arg), 2); break;
                case Func::Sinh: result = apply(Func::Cosh, arg) * inner; break;
                case Func::Cosh: result = apply(Func::Sinh, arg) * inner; break;
                case Func::Tanh: result = inner / int_pow(apply(Func::Cosh, arg), 2); break;
                case Func::Exp: result = apply(Func::Exp, arg) * inner; break;
                case Func::Log: result = inner / arg; break;
                case Func::Sqrt:
                    result = inner / (constant(2.0) * apply(Func::Sqrt, arg));
                    break;
                case Func::Asinh:
                    result = inner / apply(Func::Sqrt, constant(1.0) + int_pow(arg, 2));
                    break;
                case Func::Atan:
                    result = inner / (constant(1.0) + int_pow(arg, 2));
                    break;
            }
            break;
        }
    }
    return result.simplify();
}

// ---------------------------------------------------------------------------
// simplification

namespace {

bool is_const(const Expr& e, double v) {
    return e.kind() == Expr::Kind::Constant && e.constant_value() == v;
}

bool is_const(const Expr& e) { return e.kind() == Expr::Kind::Constant; }

// Folds a constant subexpression, but only when evaluation is defined and
// the result is finite; otherwise the node is kept for a runtime error.
Expr try_fold(const Expr& e) {
    try {
        double v = e.eval({});
        if (std::isfinite(v)) return Expr::constant(v);
    } catch (const Error&) {
    }
    return e;
}

} // namespace

Expr Expr::simplify() const {
    const Node* n = node_.get();
    switch (n->kind) {
        case Kind::Constant:
        case Kind::Variable:
            return *this;
        case Kind::Add: {
            Expr a = Expr(n->a).simplify();
            Expr b = Expr(n->b).simplify();
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            if (is_const(a) && is_const(b)) return try_fold(add(a, b));
            return add(a, b);
        }
        case Kind::Sub: {
            Expr a = Expr(n->a).simplify();
            Expr b = Expr(n->b).simplify();
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return neg(b).simplify();
            if (is_const(a) && is_const(b)) return try_fold(sub(a, b));
            return sub(a, b);
        }
        case Kind::Mul: {
            Expr a = Expr(n->a).simplify();
            Expr b = Expr(n->b).simplify();
            if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            if (is_const(a) && is_const(b)) return try_fold(mul(a, b));
            return mul(a, b);
        }
        case Kind::Div: {
            Expr a = Expr(n->a).simplify();
            Expr b = Expr(n->b).simplify();
            if (is_const(b, 1.0)) return a;
            if (is_const(a, 0.0) && !is_const(b, 0.0)) return constant(0.0);
            if (is_const(a) && is_const(b)) return try_fold(div(a, b));
            return div(a, b);
        }
        case Kind::Neg: {
            Expr a = Expr(n->a).simplify();
            if (is_const(a)) return constant(-a.constant_value());
            if (a.kind() == Kind::Neg) return a.child(0);
            return neg(a);
        }
        case Kind::IntPow: {
            Expr a = Expr(n->a).simplify();
            if (n->expo == 0) return constant(1.0);
            if (n->expo == 1) return a;
            if (is_const(a)) return try_fold(int_pow(a, n->expo));
            // negative exponents normalize to 1/a^k so printing stays
            // within the grammar
            if (n->expo < 0) return div(constant(1.0), int_pow(a, -n->expo));
            return int_pow(a, n->expo);
        }
        case Kind::Func: {
            Expr a = Expr(n->a).simplify();
            if (is_const(a)) return try_fold(apply(n->fn, a));
            return apply(n->fn, a);
        }
    }
    return *this;
}

// ---------------------------------------------------------------------------
// printing

namespace {

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

} // namespace

namespace detail {

// Precedence for printing: + - (1), * / (2), unary - (3), ^ (4), atoms (5).
int print_prec(const Expr& e) {
    switch (e.kind()) {
        case Expr::Kind::Add:
        case Expr::Kind::Sub:
            return 1;
        case Expr::Kind::Mul:
        case Expr::Kind::Div:
            return 2;
        case Expr::Kind::Neg:
            return 3;
        case Expr::Kind::IntPow:
            return e.exponent() < 0 ? 2 : 4; // negative powers print as 1/e^k
        case Expr::Kind::Constant:
            return std::signbit(e.constant_value()) ? 3 : 5;
        default:
            return 5;
    }
}

std::string print_expr(const Expr& e, int min_prec) {
    std::string body;
    switch (e.kind()) {
        case Expr::Kind::Constant:
            body = format_double(e.constant_value());
            break;
        case Expr::Kind::Variable:
            body = "x" + std::to_string(e.variable_index());
            break;
        case Expr::Kind::Add:
            body = print_expr(e.child(0), 1) + " + " + print_expr(e.child(1), 2);
            break;
        case Expr::Kind::Sub:
            body = print_expr(e.child(0), 1) + " - " + print_expr(e.child(1), 2);
            break;
        case Expr::Kind::Mul:
            body = print_expr(e.child(0), 2) + "*" + print_expr(e.child(1), 3);
            break;
        case Expr::Kind::Div:
            body = print_expr(e.child(0), 2) + "/" + print_expr(e.child(1), 3);
            break;
        case Expr::Kind::Neg:
            body = "-" + print_expr(e.child(0), 3);
            break;
        case Expr::Kind::IntPow:
            if (e.exponent() < 0) {
                body = "1/" + print_expr(Expr::int_pow(e.child(0), -e.exponent()), 3);
            } else {
                body = print_expr(e.child(0), 5) + "^" + std::to_string(e.exponent());
            }
            break;
        case Expr::Kind::Func:
            body = std::string(Expr::func_name(e.func())) + "(" + print_expr(e.child(0), 0) + ")";
            break;
    }
    if (print_prec(e) < min_prec) return "(" + body + ")";
    return body;
}

} // namespace detail

std::string Expr::print() const { return detail::print_expr(*this, 0); }

// ---------------------------------------------------------------------------
// parsing

namespace {

enum class TokKind { Number, Ident, Op, End };

struct Token {
    TokKind kind;
    std::string text;
    double number = 0.0;
    bool integral = false;     // number token with no '.' and no exponent
    std::int64_t int_value = 0;
    std::size_t pos = 0;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        current_ = Token{TokKind::End, "", 0.0, false, 0, pos_};
        if (pos_ >= text_.size()) return;
        char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            lex_number();
        } else if (c >= 'a' && c <= 'z') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   ((text_[pos_] >= 'a' && text_[pos_] <= 'z') ||
                    std::isdigit(static_cast<unsigned char>(text_[pos_]))))
                ++pos_;
            current_ = Token{TokKind::Ident, text_.substr(start, pos_ - start), 0.0, false, 0, start};
        } else if (std::string("+-*/^(),").find(c) != std::string::npos) {
            current_ = Token{TokKind::Op, std::string(1, c), 0.0, false, 0, pos_};
            ++pos_;
        } else {
            throw SyntaxError(pos_, std::string("unexpected character '") + c + "'");
        }
    }

    void lex_number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        bool integral = true;
        if (pos_ + 1 < text_.size() && text_[pos_] == '.' &&
            std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
            integral = false;
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_ + 1;
            if (mark < text_.size() && (text_[mark] == '+' || text_[mark] == '-')) ++mark;
            if (mark < text_.size() && std::isdigit(static_cast<unsigned char>(text_[mark]))) {
                integral = false;
                pos_ = mark;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            }
        }
        std::string text = text_.substr(start, pos_ - start);
        double value = std::strtod(text.c_str(), nullptr);
        std::int64_t iv = 0;
        if (integral) {
            auto res = std::from_chars(text.data(), text.data() + text.size(), iv);
            if (res.ec != std::errc()) {
                integral = false;
            }
        }
        current_ = Token{TokKind::Number, text, value, integral, iv, start};
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    Token current_;
};

const std::array<std::pair<const char*, Expr::Func>, 11> kFuncTable = {{
    {"sin", Expr::Func::Sin},
    {"cos", Expr::Func::Cos},
    {"tan", Expr::Func::Tan},
    {"sinh", Expr::Func::Sinh},
    {"cosh", Expr::Func::Cosh},
    {"tanh", Expr::Func::Tanh},
    {"exp", Expr::Func::Exp},
    {"log", Expr::Func::Log},
    {"sqrt", Expr::Func::Sqrt},
    {"asinh", Expr::Func::Asinh},
    {"atan", Expr::Func::Atan},
}};

class Parser {
public:
    Parser(const std::string& text, int arity) : lexer_(text), arity_(arity) {}

    Expr run() {
        Expr e = parse_sum();
        const Token& t = lexer_.peek();
        if (t.kind != TokKind::End)
            throw SyntaxError(t.pos, "unexpected token '" + t.text + "'");
        return e;
    }

private:
    bool peek_op(const char* op) const {
        const Token& t = lexer_.peek();
        return t.kind == TokKind::Op && t.text == op;
    }

    void expect_op(const char* op) {
        const Token& t = lexer_.peek();
        if (t.kind != TokKind::Op || t.text != op)
            throw SyntaxError(t.pos, std::string("expected '") + op + "'");
        lexer_.take();
    }

    Expr parse_sum() {
        Expr lhs = parse_term();
        while (peek_op("+") || peek_op("-")) {
            bool plus = peek_op("+");
            lexer_.take();
            Expr rhs = parse_term();
            lhs = plus ? Expr::add(lhs, rhs) : Expr::sub(lhs, rhs);
        }
        return lhs;
    }

    Expr parse_term() {
        Expr lhs = parse_factor();
        while (peek_op("*") || peek_op("/")) {
            bool times = peek_op("*");
            lexer_.take();
            Expr rhs = parse_factor();
            lhs = times ? Expr::mul(lhs, rhs) : Expr::div(lhs, rhs);
        }
        return lhs;
    }

    // factor := '-' factor | power
    Expr parse_factor() {
        if (peek_op("-")) {
            lexer_.take();
            return Expr::neg(parse_factor());
        }
        return parse_power();
    }

    // power := atom ('^' exponent)?
    Expr parse_power() {
        Expr base = parse_atom();
        if (peek_op("^")) {
            lexer_.take();
            return Expr::int_pow(base, parse_exponent());
        }
        return base;
    }

    // exponent := integer-literal ('^' exponent)?   (right-associative)
    std::int64_t parse_exponent() {
        const Token& t = lexer_.peek();
        if (t.kind != TokKind::Number || !t.integral)
            throw SyntaxError(t.pos, "'^' requires an integer-literal exponent");
        Token lit = lexer_.take();
        std::int64_t value = lit.int_value;
        if (value > kMaxExponent) throw SyntaxError(lit.pos, "exponent too large");
        if (peek_op("^")) {
            lexer_.take();
            std::int64_t upper = parse_exponent();
            std::int64_t acc = 1;
            for (std::int64_t i = 0; i < upper; ++i) {
                acc *= value;
                if (acc > kMaxExponent || acc < -kMaxExponent)
                    throw SyntaxError(lit.pos, "exponent tower too large");
            }
            value = acc;
        }
        return value;
    }

    Expr parse_atom() {
        const Token& t = lexer_.peek();
        if (t.kind == TokKind::Number) {
            return Expr::constant(lexer_.take().number);
        }
        if (t.kind == TokKind::Ident) {
            Token id = lexer_.take();
            if (id.text == "pi") return Expr::constant(kPi);
            for (const auto& [name, fn] : kFuncTable) {
                if (id.text == name) {
                    expect_op("(");
                    Expr arg = parse_sum();
                    expect_op(")");
                    return Expr::apply(fn, arg);
                }
            }
            if (id.text.size() > 1 && id.text[0] == 'x') {
                bool digits = true;
                for (std::size_t i = 1; i < id.text.size(); ++i)
                    if (!std::isdigit(static_cast<unsigned char>(id.text[i]))) digits = false;
                if (digits) {
                    int index = 0;
                    auto res = std::from_chars(id.text.data() + 1,
                                               id.text.data() + id.text.size(), index);
                    if (res.ec != std::errc())
                        throw SyntaxError(id.pos, "variable index out of range");
                    if (index < 1 || index > arity_)
                        throw ArityError("variable x" + std::to_string(index) +
                                         " exceeds arity " + std::to_string(arity_));
                    return Expr::variable(index);
                }
            }
            throw SyntaxError(id.pos, "unknown identifier '" + id.text + "'");
        }
        if (t.kind == TokKind::Op && t.text == "(") {
            lexer_.take();
            Expr e = parse_sum();
            expect_op(")");
            return e;
        }
        throw SyntaxError(t.pos, t.kind == TokKind::End
                                     ? std::string("unexpected end of input")
                                     : "unexpected token '" + t.text + "'");
    }

    Lexer lexer_;
    int arity_;
};

} // namespace

Expr parse(const std::string& text, int arity) {
    if (arity < 1) throw ArityError("arity must be >= 1, got " + std::to_string(arity));
    return Parser(text, arity).run();
}

} // namespace ptqm
