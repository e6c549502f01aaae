#include "findim/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "findim/error.hpp"
#include "findim/util.hpp"

namespace findim::expr {

namespace {

Expr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

bool is_const(const Expr& e) { return e->kind == Kind::Const; }
bool is_const(const Expr& e, double v) { return e->kind == Kind::Const && e->value == v; }

// Integer powers by squaring so negative bases behave predictably.
template <typename T>
T ipow(T base, int n) {
    if (n < 0) return T(1.0) / ipow(base, -n);
    T acc(1.0);
    while (n > 0) {
        if (n & 1) acc = acc * base;
        base = base * base;
        n >>= 1;
    }
    return acc;
}

Eigen::ArrayXd ipow_array(Eigen::ArrayXd base, int n) {
    if (n < 0) return ipow_array(std::move(base), -n).inverse();
    Eigen::ArrayXd acc = Eigen::ArrayXd::Ones(base.size());
    while (n > 0) {
        if (n & 1) acc *= base;
        base *= base;
        n >>= 1;
    }
    return acc;
}

// ---- truncated power series ("jets") for the cutoff profile -----------------

using Jet = std::vector<double>;

Jet jet_recip(const Jet& a) {
    int K = static_cast<int>(a.size()) - 1;
    Jet r(K + 1);
    r[0] = 1.0 / a[0];
    for (int n = 1; n <= K; ++n) {
        double acc = 0.0;
        for (int j = 1; j <= n; ++j) acc += a[j] * r[n - j];
        r[n] = -acc / a[0];
    }
    return r;
}

Jet jet_exp(const Jet& a) {
    int K = static_cast<int>(a.size()) - 1;
    Jet e(K + 1);
    e[0] = std::exp(a[0]);
    for (int n = 1; n <= K; ++n) {
        double acc = 0.0;
        for (int j = 1; j <= n; ++j) acc += j * a[j] * e[n - j];
        e[n] = acc / n;
    }
    return e;
}

double bump_value(double r, double s) {
    double s2 = s * s, r2 = r * r;
    if (s2 <= r2) return 1.0;
    if (s2 >= 4.0 * r2) return 0.0;
    double t = (4.0 * r2 - s2) / (3.0 * r2);  // 1 at |s| = r, 0 at |s| = 2r
    double q = 1.0 / t - 1.0 / (1.0 - t);
    if (q > 700.0) return 0.0;
    if (q < -700.0) return 1.0;
    return 1.0 / (1.0 + std::exp(q));
}

}  // namespace

std::vector<double> bump_jet(double r, double s, int k) {
    std::vector<double> out(k + 1, 0.0);
    double s2 = s * s, r2 = r * r;
    if (s2 <= r2) {
        out[0] = 1.0;  // flat plateau: every derivative vanishes
        return out;
    }
    if (s2 >= 4.0 * r2) return out;
    Jet t(k + 1, 0.0);
    t[0] = (4.0 * r2 - s2) / (3.0 * r2);
    if (k >= 1) t[1] = -2.0 * s / (3.0 * r2);
    if (k >= 2) t[2] = -1.0 / (3.0 * r2);
    Jet omt(k + 1, 0.0);  // 1 - t
    for (int j = 0; j <= k; ++j) omt[j] = -t[j];
    omt[0] += 1.0;
    Jet rt = jet_recip(t), romt = jet_recip(omt);
    Jet q(k + 1);
    for (int j = 0; j <= k; ++j) q[j] = rt[j] - romt[j];
    if (q[0] > 700.0) return out;  // transition tail, zero to double precision
    if (q[0] < -700.0) {
        out[0] = 1.0;
        return out;
    }
    Jet E = jet_exp(q);
    E[0] += 1.0;
    Jet sig = jet_recip(E);
    double fact = 1.0;
    for (int j = 0; j <= k; ++j) {
        if (j > 0) fact *= j;
        out[j] = fact * sig[j];
    }
    return out;
}

// ---- smart constructors -----------------------------------------------------

Expr constant(double v) { return make({.kind = Kind::Const, .value = v}); }
Expr var_x() { return make({.kind = Kind::X}); }

Expr var_u(int i) {
    if (i < 1) throw Error("component index must be >= 1");
    return make({.kind = Kind::U, .index = i});
}

Expr neg(Expr a) {
    if (is_const(a)) return constant(-a->value);
    if (a->kind == Kind::Neg) return a->a;
    return make({.kind = Kind::Neg, .a = std::move(a)});
}

Expr add(Expr a, Expr b) {
    if (is_const(a) && is_const(b)) return constant(a->value + b->value);
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    return make({.kind = Kind::Add, .a = std::move(a), .b = std::move(b)});
}

Expr sub(Expr a, Expr b) {
    if (is_const(a) && is_const(b)) return constant(a->value - b->value);
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return neg(std::move(b));
    return make({.kind = Kind::Sub, .a = std::move(a), .b = std::move(b)});
}

Expr mul(Expr a, Expr b) {
    if (is_const(a) && is_const(b)) return constant(a->value * b->value);
    if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    return make({.kind = Kind::Mul, .a = std::move(a), .b = std::move(b)});
}

Expr div(Expr a, Expr b) {
    if (is_const(b, 1.0)) return a;
    if (is_const(a) && is_const(b) && b->value != 0.0) return constant(a->value / b->value);
    if (is_const(a, 0.0) && !is_const(b, 0.0)) return constant(0.0);
    return make({.kind = Kind::Div, .a = std::move(a), .b = std::move(b)});
}

Expr pow(Expr a, int n) {
    if (n == 0) return constant(1.0);
    if (n == 1) return a;
    if (is_const(a)) return constant(ipow(a->value, n));
    return make({.kind = Kind::Pow, .index = n, .a = std::move(a)});
}

Expr apply(Kind fn, Expr a) {
    if (is_const(a)) {
        double v = a->value;
        switch (fn) {
            case Kind::Sin: return constant(std::sin(v));
            case Kind::Cos: return constant(std::cos(v));
            case Kind::Exp: return constant(std::exp(v));
            case Kind::Tanh: return constant(std::tanh(v));
            default: break;
        }
    }
    switch (fn) {
        case Kind::Sin:
        case Kind::Cos:
        case Kind::Exp:
        case Kind::Tanh: return make({.kind = fn, .a = std::move(a)});
        default: throw Error("apply: not a unary function kind");
    }
}

Expr bump(double r, Expr s, int order) {
    if (!(r > 0.0)) throw Error("bump radius must be positive");
    if (order < 0) throw Error("bump derivative order must be >= 0");
    if (is_const(s)) return constant(bump_jet(r, s->value, order)[order]);
    return make({.kind = Kind::Bump, .index = order, .radius = r, .a = std::move(s)});
}

bool is_zero(const Expr& e) { return is_const(e, 0.0); }

// ---- evaluation -------------------------------------------------------------

double eval(const Expr& e, double x, const Eigen::VectorXd& u) {
    switch (e->kind) {
        case Kind::Const: return e->value;
        case Kind::X: return x;
        case Kind::U:
            if (e->index > u.size()) throw EvalError("component u" + std::to_string(e->index) + " not supplied");
            return u(e->index - 1);
        case Kind::Neg: return -eval(e->a, x, u);
        case Kind::Sin: return std::sin(eval(e->a, x, u));
        case Kind::Cos: return std::cos(eval(e->a, x, u));
        case Kind::Exp: return std::exp(eval(e->a, x, u));
        case Kind::Tanh: return std::tanh(eval(e->a, x, u));
        case Kind::Bump: {
            double s = eval(e->a, x, u);
            if (e->index == 0) return bump_value(e->radius, s);
            return bump_jet(e->radius, s, e->index)[e->index];
        }
        case Kind::Add: return eval(e->a, x, u) + eval(e->b, x, u);
        case Kind::Sub: return eval(e->a, x, u) - eval(e->b, x, u);
        case Kind::Mul: return eval(e->a, x, u) * eval(e->b, x, u);
        case Kind::Div: {
            double d = eval(e->b, x, u);
            if (d == 0.0) throw EvalError("division by zero");
            return eval(e->a, x, u) / d;
        }
        case Kind::Pow: return ipow(eval(e->a, x, u), e->index);
    }
    throw EvalError("corrupt expression node");
}

Eigen::ArrayXd eval_array(const Expr& e, const Eigen::ArrayXd& x,
                          const std::vector<Eigen::ArrayXd>& u) {
    switch (e->kind) {
        case Kind::Const: return Eigen::ArrayXd::Constant(x.size(), e->value);
        case Kind::X: return x;
        case Kind::U:
            if (e->index > static_cast<int>(u.size()))
                throw EvalError("component u" + std::to_string(e->index) + " not supplied");
            return u[e->index - 1];
        case Kind::Neg: return -eval_array(e->a, x, u);
        case Kind::Sin: return eval_array(e->a, x, u).sin();
        case Kind::Cos: return eval_array(e->a, x, u).cos();
        case Kind::Exp: return eval_array(e->a, x, u).exp();
        case Kind::Tanh: return eval_array(e->a, x, u).tanh();
        case Kind::Bump: {
            Eigen::ArrayXd s = eval_array(e->a, x, u);
            Eigen::ArrayXd out(s.size());
            if (e->index == 0) {
                for (Eigen::Index p = 0; p < s.size(); ++p) out(p) = bump_value(e->radius, s(p));
            } else {
                for (Eigen::Index p = 0; p < s.size(); ++p)
                    out(p) = bump_jet(e->radius, s(p), e->index)[e->index];
            }
            return out;
        }
        case Kind::Add: return eval_array(e->a, x, u) + eval_array(e->b, x, u);
        case Kind::Sub: return eval_array(e->a, x, u) - eval_array(e->b, x, u);
        case Kind::Mul: return eval_array(e->a, x, u) * eval_array(e->b, x, u);
        case Kind::Div: {
            Eigen::ArrayXd d = eval_array(e->b, x, u);
            if ((d == 0.0).any()) throw EvalError("division by zero");
            return eval_array(e->a, x, u) / d;
        }
        case Kind::Pow: return ipow_array(eval_array(e->a, x, u), e->index);
    }
    throw EvalError("corrupt expression node");
}

// ---- symbolic derivative ----------------------------------------------------

Expr diff_u(const Expr& e, int i) {
    switch (e->kind) {
        case Kind::Const:
        case Kind::X: return constant(0.0);
        case Kind::U: return constant(e->index == i ? 1.0 : 0.0);
        case Kind::Neg: return neg(diff_u(e->a, i));
        case Kind::Sin: return mul(apply(Kind::Cos, e->a), diff_u(e->a, i));
        case Kind::Cos: return neg(mul(apply(Kind::Sin, e->a), diff_u(e->a, i)));
        case Kind::Exp: return mul(apply(Kind::Exp, e->a), diff_u(e->a, i));
        case Kind::Tanh:
            return mul(sub(constant(1.0), pow(apply(Kind::Tanh, e->a), 2)), diff_u(e->a, i));
        case Kind::Bump: return mul(bump(e->radius, e->a, e->index + 1), diff_u(e->a, i));
        case Kind::Add: return add(diff_u(e->a, i), diff_u(e->b, i));
        case Kind::Sub: return sub(diff_u(e->a, i), diff_u(e->b, i));
        case Kind::Mul: return add(mul(diff_u(e->a, i), e->b), mul(e->a, diff_u(e->b, i)));
        case Kind::Div:
            return div(sub(mul(diff_u(e->a, i), e->b), mul(e->a, diff_u(e->b, i))),
                       pow(e->b, 2));
        case Kind::Pow:
            return mul(mul(constant(e->index), pow(e->a, e->index - 1)), diff_u(e->a, i));
    }
    throw Error("corrupt expression node");
}

Expr substitute_u(const Expr& e, const std::vector<Expr>& repl) {
    switch (e->kind) {
        case Kind::Const:
        case Kind::X: return e;
        case Kind::U:
            if (e->index > static_cast<int>(repl.size()))
                throw Error("substitute_u: no replacement for u" + std::to_string(e->index));
            return repl[e->index - 1];
        case Kind::Neg: return neg(substitute_u(e->a, repl));
        case Kind::Sin:
        case Kind::Cos:
        case Kind::Exp:
        case Kind::Tanh: return apply(e->kind, substitute_u(e->a, repl));
        case Kind::Bump: return bump(e->radius, substitute_u(e->a, repl), e->index);
        case Kind::Add: return add(substitute_u(e->a, repl), substitute_u(e->b, repl));
        case Kind::Sub: return sub(substitute_u(e->a, repl), substitute_u(e->b, repl));
        case Kind::Mul: return mul(substitute_u(e->a, repl), substitute_u(e->b, repl));
        case Kind::Div: return div(substitute_u(e->a, repl), substitute_u(e->b, repl));
        case Kind::Pow: return pow(substitute_u(e->a, repl), e->index);
    }
    throw Error("corrupt expression node");
}

// ---- printing ---------------------------------------------------------------

namespace {

// Precedence levels for printing: + - (1), * / (2), unary - (3), ^ (4), atoms (5).
int prec(const Expr& e) {
    switch (e->kind) {
        case Kind::Add:
        case Kind::Sub: return 1;
        case Kind::Mul:
        case Kind::Div: return 2;
        case Kind::Neg: return 3;
        case Kind::Pow: return 4;
        case Kind::Const: return e->value < 0.0 ? 3 : 5;
        default: return 5;
    }
}

void print(const Expr& e, int need, std::string& out) {
    bool paren = prec(e) < need;
    if (paren) out += '(';
    switch (e->kind) {
        case Kind::Const: out += format_double(e->value); break;
        case Kind::X: out += 'x'; break;
        case Kind::U: out += 'u' + std::to_string(e->index); break;
        case Kind::Neg:
            out += '-';
            print(e->a, 3, out);
            break;
        case Kind::Sin:
        case Kind::Cos:
        case Kind::Exp:
        case Kind::Tanh: {
            const char* name = e->kind == Kind::Sin   ? "sin"
                               : e->kind == Kind::Cos ? "cos"
                               : e->kind == Kind::Exp ? "exp"
                                                      : "tanh";
            out += name;
            out += '(';
            print(e->a, 0, out);
            out += ')';
            break;
        }
        case Kind::Bump:
            if (e->index == 0) {
                out += "bump(" + format_double(e->radius) + ", ";
            } else {
                out += "bump_d(" + std::to_string(e->index) + ", " + format_double(e->radius) + ", ";
            }
            print(e->a, 0, out);
            out += ')';
            break;
        case Kind::Add:
            print(e->a, 1, out);
            out += " + ";
            print(e->b, 2, out);
            break;
        case Kind::Sub:
            print(e->a, 1, out);
            out += " - ";
            print(e->b, 2, out);
            break;
        case Kind::Mul:
            print(e->a, 2, out);
            out += '*';
            print(e->b, 3, out);
            break;
        case Kind::Div:
            print(e->a, 2, out);
            out += '/';
            print(e->b, 3, out);
            break;
        case Kind::Pow:
            print(e->a, 5, out);
            out += '^' + std::to_string(e->index);
            break;
    }
    if (paren) out += ')';
}

}  // namespace

std::string to_string(const Expr& e) {
    std::string out;
    print(e, 0, out);
    return out;
}

// ---- parser -----------------------------------------------------------------

namespace {

struct Token {
    enum Type { Num, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End } type;
    double num = 0.0;
    std::string_view ident{};
    std::size_t pos = 0;
};

class Parser {
public:
    Parser(std::string_view src, int m) : src_(src), m_(m) { next(); }

    Expr run() {
        Expr e = parse_sum();
        if (cur_.type != Token::End) throw ParseError(cur_.pos, "unexpected trailing input");
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int m_;
    Token cur_;

    void next() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        cur_.pos = pos_;
        if (pos_ >= src_.size()) {
            cur_.type = Token::End;
            return;
        }
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* first = src_.data() + pos_;
            const char* last = src_.data() + src_.size();
            double v = 0.0;
            auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc()) throw ParseError(pos_, "malformed number");
            pos_ += static_cast<std::size_t>(res.ptr - first);
            cur_.type = Token::Num;
            cur_.num = v;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            cur_.type = Token::Ident;
            cur_.ident = src_.substr(start, pos_ - start);
            return;
        }
        ++pos_;
        switch (c) {
            case '+': cur_.type = Token::Plus; return;
            case '-': cur_.type = Token::Minus; return;
            case '*': cur_.type = Token::Star; return;
            case '/': cur_.type = Token::Slash; return;
            case '^': cur_.type = Token::Caret; return;
            case '(': cur_.type = Token::LParen; return;
            case ')': cur_.type = Token::RParen; return;
            case ',': cur_.type = Token::Comma; return;
            default: throw ParseError(cur_.pos, std::string("unexpected character '") + c + "'");
        }
    }

    void expect(Token::Type t, const char* what) {
        if (cur_.type != t) throw ParseError(cur_.pos, std::string("expected ") + what);
        next();
    }

    Expr parse_sum() {
        Expr e = parse_product();
        while (cur_.type == Token::Plus || cur_.type == Token::Minus) {
            bool plus = cur_.type == Token::Plus;
            next();
            Expr rhs = parse_product();
            e = plus ? add(std::move(e), std::move(rhs)) : sub(std::move(e), std::move(rhs));
        }
        return e;
    }

    Expr parse_product() {
        Expr e = parse_unary();
        while (cur_.type == Token::Star || cur_.type == Token::Slash) {
            bool star = cur_.type == Token::Star;
            next();
            Expr rhs = parse_unary();
            e = star ? mul(std::move(e), std::move(rhs)) : div(std::move(e), std::move(rhs));
        }
        return e;
    }

    Expr parse_unary() {
        if (cur_.type == Token::Minus) {
            next();
            return neg(parse_unary());
        }
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (cur_.type == Token::Caret) {
            next();
            return pow(std::move(base), parse_int("exponent"));
        }
        return base;
    }

    int parse_int(const char* what) {
        bool negate = false;
        if (cur_.type == Token::Minus) {
            negate = true;
            next();
        }
        if (cur_.type != Token::Num)
            throw ParseError(cur_.pos, std::string("expected integer ") + what);
        double v = cur_.num;
        if (v != std::rint(v) || std::abs(v) > 1e9)
            throw ParseError(cur_.pos, std::string(what) + " must be an integer");
        next();
        int n = static_cast<int>(v);
        return negate ? -n : n;
    }

    double parse_radius() {
        if (cur_.type != Token::Num) throw ParseError(cur_.pos, "expected numeric cutoff radius");
        double r = cur_.num;
        if (!(r > 0.0)) throw ParseError(cur_.pos, "cutoff radius must be positive");
        next();
        return r;
    }

    Expr parse_atom() {
        if (cur_.type == Token::Num) {
            double v = cur_.num;
            next();
            return constant(v);
        }
        if (cur_.type == Token::LParen) {
            next();
            Expr e = parse_sum();
            expect(Token::RParen, "')'");
            return e;
        }
        if (cur_.type == Token::Ident) {
            std::string_view id = cur_.ident;
            std::size_t at = cur_.pos;
            next();
            if (id == "x") return var_x();
            if (id.size() >= 2 && id[0] == 'u' &&
                id.find_first_not_of("0123456789", 1) == std::string_view::npos) {
                long idx = std::strtol(std::string(id.substr(1)).c_str(), nullptr, 10);
                if (idx < 1 || idx > m_)
                    throw ParseError(at, "component index out of range (m = " + std::to_string(m_) + ")");
                return var_u(static_cast<int>(idx));
            }
            if (id == "sin" || id == "cos" || id == "exp" || id == "tanh") {
                Kind k = id == "sin" ? Kind::Sin : id == "cos" ? Kind::Cos
                         : id == "exp" ? Kind::Exp : Kind::Tanh;
                expect(Token::LParen, "'('");
                Expr arg = parse_sum();
                expect(Token::RParen, "')'");
                return apply(k, std::move(arg));
            }
            if (id == "bump") {
                expect(Token::LParen, "'('");
                double r = parse_radius();
                expect(Token::Comma, "','");
                Expr arg = parse_sum();
                expect(Token::RParen, "')'");
                return bump(r, std::move(arg));
            }
            if (id == "bump_d") {
                expect(Token::LParen, "'('");
                int k = parse_int("derivative order");
                if (k < 1) throw ParseError(at, "derivative order must be >= 1");
                expect(Token::Comma, "','");
                double r = parse_radius();
                expect(Token::Comma, "','");
                Expr arg = parse_sum();
                expect(Token::RParen, "')'");
                return bump(r, std::move(arg), k);
            }
            throw ParseError(at, "unknown identifier '" + std::string(id) + "'");
        }
        throw ParseError(cur_.pos, "expected expression");
    }
};

}  // namespace

Expr parse(std::string_view src, int m) {
    if (m < 1) throw ParseError(0, "component count must be >= 1");
    return Parser(src, m).run();
}

}  // namespace findim::expr
