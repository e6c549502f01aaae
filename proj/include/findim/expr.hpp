#ifndef FINDIM_EXPR_HPP
#define FINDIM_EXPR_HPP

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace findim::expr {

enum class Kind { Const, X, U, Neg, Sin, Cos, Exp, Tanh, Bump, Add, Sub, Mul, Div, Pow };

struct Node;
using Expr = std::shared_ptr<const Node>;

/// Immutable expression tree in x and u1..um.  `bump(r, s)` is the C-infinity
/// cutoff: identically 1 for |s| <= r, identically 0 for |s| >= 2r.  A Bump
/// node with index k > 0 is the k-th derivative of that profile with respect
/// to its argument (printed as `bump_d(k, r, s)`).
struct Node {
    Kind kind;
    double value = 0.0;   // Const
    int index = 0;        // U: 1-based component; Pow: exponent; Bump: derivative order
    double radius = 0.0;  // Bump
    Expr a, b;
};

// Smart constructors; they fold constants and drop additive/multiplicative units.
Expr constant(double v);
Expr var_x();
Expr var_u(int i);
Expr neg(Expr a);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr pow(Expr a, int n);
Expr apply(Kind fn, Expr a);  // Sin, Cos, Exp, Tanh
Expr bump(double r, Expr s, int order = 0);

/// Parse `src` with components u1..um allowed.  Precedence, tightest first:
/// ^ (integer exponent), unary -, * /, + -; binary ops associate left.
/// Throws ParseError with a character offset on malformed input.
Expr parse(std::string_view src, int m);

/// Minimal-parentheses form; parse(to_string(e), m) evaluates identically to e.
std::string to_string(const Expr& e);

double eval(const Expr& e, double x, const Eigen::VectorXd& u);

/// Vectorised evaluation over a batch of points; u[i] holds component i+1 at
/// every point.  All arrays must share one size.
Eigen::ArrayXd eval_array(const Expr& e, const Eigen::ArrayXd& x,
                          const std::vector<Eigen::ArrayXd>& u);

/// Symbolic partial derivative with respect to u_i.
Expr diff_u(const Expr& e, int i);

/// Replace u_i by repl[i-1] everywhere (used for linear changes of variables).
Expr substitute_u(const Expr& e, const std::vector<Expr>& repl);

bool is_zero(const Expr& e);

/// Value and first k derivatives of the cutoff profile at argument s,
/// computed with truncated power-series (jet) arithmetic.
std::vector<double> bump_jet(double r, double s, int k);

}  // namespace findim::expr

#endif
