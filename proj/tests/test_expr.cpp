#include <cmath>
#include <random>

#include "doctest.h"
#include "findim/error.hpp"
#include "findim/expr.hpp"

using namespace findim;
using expr::Expr;

namespace {

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd u(2);
    u << a, b;
    return u;
}

double fd_u(const Expr& e, int i, double x, Eigen::VectorXd u, double h = 1e-5) {
    u(i - 1) += h;
    double p = expr::eval(e, x, u);
    u(i - 1) -= 2 * h;
    double m = expr::eval(e, x, u);
    return (p - m) / (2 * h);
}

void check_derivative_against_fd(const std::string& src, int m, unsigned seed) {
    Expr e = expr::parse(src, m);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, 1.0), uu(-2.2, 2.2);
    for (int i = 1; i <= m; ++i) {
        Expr d1 = expr::diff_u(e, i);
        Expr d2 = expr::diff_u(d1, i);
        for (int trial = 0; trial < 40; ++trial) {
            double x = ux(rng);
            Eigen::VectorXd u(m);
            for (int j = 0; j < m; ++j) u(j) = uu(rng);
            double sym = expr::eval(d1, x, u);
            double fd = fd_u(e, i, x, u);
            CHECK(std::abs(sym - fd) <= std::max(1e-6 * std::max(std::abs(sym), std::abs(fd)), 1e-8));
            double sym2 = expr::eval(d2, x, u);
            double fd2 = fd_u(d1, i, x, u);
            CHECK(std::abs(sym2 - fd2) <= std::max(1e-5 * std::max(std::abs(sym2), std::abs(fd2)), 1e-7));
        }
    }
}

}  // namespace

TEST_CASE("parse builds the expected tree shapes") {
    Expr e = expr::parse("u1*u2 + sin(x)", 2);
    REQUIRE(e->kind == expr::Kind::Add);
    CHECK(e->a->kind == expr::Kind::Mul);
    CHECK(e->a->a->kind == expr::Kind::U);
    CHECK(e->a->a->index == 1);
    CHECK(e->b->kind == expr::Kind::Sin);
    CHECK(expr::to_string(e) == "u1*u2 + sin(x)");
}

TEST_CASE("component index out of range is a parse error") {
    CHECK_THROWS_AS(expr::parse("u3", 2), ParseError);
    try {
        expr::parse("u1 + u3", 2);
        FAIL("expected ParseError");
    } catch (const ParseError& pe) {
        CHECK(pe.offset == 5);
        CHECK(pe.message.find("out of range") != std::string::npos);
    }
}

TEST_CASE("malformed input raises ParseError with an in-range offset") {
    const char* bad[] = {"2*",        "(x",       "x^1.5",  "foo(x)", "u0",
                         "bump(1)",   "bump(-1, x)", "2**3", "x 3",    "x^2^3",
                         "bump_d(0, 1, x)", ""};
    for (const char* src : bad) {
        try {
            expr::parse(src, 2);
            FAIL("expected ParseError for: ", src);
        } catch (const ParseError& pe) {
            CHECK(pe.offset <= std::string(src).size() + 1);
        }
    }
}

TEST_CASE("hand-checked evaluations") {
    Eigen::VectorXd none(0);
    CHECK(expr::eval(expr::parse("x", 1), 0.3, Eigen::VectorXd::Zero(1)) == 0.3);
    CHECK(expr::eval(expr::parse("2*x^2 - 1", 1), 0.5, Eigen::VectorXd::Zero(1)) == -0.5);
    // precedence and associativity
    CHECK(expr::eval(expr::parse("-x^2", 1), 3.0, Eigen::VectorXd::Zero(1)) == -9.0);
    CHECK(expr::eval(expr::parse("2-3-4", 1), 0.0, Eigen::VectorXd::Zero(1)) == -5.0);
    CHECK(expr::eval(expr::parse("2/4/5", 1), 0.0, Eigen::VectorXd::Zero(1)) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(expr::eval(expr::parse("2*-3", 1), 0.0, Eigen::VectorXd::Zero(1)) == -6.0);
    CHECK(expr::eval(expr::parse("2^-2", 1), 0.0, Eigen::VectorXd::Zero(1)) == 0.25);
}

TEST_CASE("division by zero raises EvalError") {
    Expr e = expr::parse("1/x", 1);
    CHECK_THROWS_AS(expr::eval(e, 0.0, Eigen::VectorXd::Zero(1)), EvalError);
    Eigen::ArrayXd x(3);
    x << 0.5, 0.0, 1.0;
    std::vector<Eigen::ArrayXd> u{Eigen::ArrayXd::Zero(3)};
    CHECK_THROWS_AS(expr::eval_array(e, x, u), EvalError);
}

TEST_CASE("cutoff is exactly 1 on the plateau and exactly 0 outside support") {
    Expr e = expr::parse("bump(1, u1)", 1);
    auto at = [&](double v) { return expr::eval(e, 0.0, Eigen::VectorXd::Constant(1, v)); };
    CHECK(at(0.5) == 1.0);
    CHECK(at(-1.0) == 1.0);
    CHECK(at(1.0) == 1.0);
    CHECK(at(2.0) == 0.0);
    CHECK(at(2.5) == 0.0);
    CHECK(at(-3.0) == 0.0);
    double mid = at(1.5);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
    CHECK(at(1.5) == at(-1.5));
    // monotone decay across the transition zone
    CHECK(at(1.2) > at(1.5));
    CHECK(at(1.5) > at(1.8));

    Expr d = expr::diff_u(e, 1);
    auto dat = [&](double v) { return expr::eval(d, 0.0, Eigen::VectorXd::Constant(1, v)); };
    CHECK(dat(0.5) == 0.0);
    CHECK(dat(1.0) == 0.0);
    CHECK(dat(2.0) == 0.0);
    CHECK(dat(2.5) == 0.0);
    CHECK(dat(1.5) < 0.0);
}

TEST_CASE("cutoff jets are internally consistent to high order") {
    for (double s : {1.15, 1.4, 1.55, 1.8, -1.3, -1.9}) {
        auto jet = expr::bump_jet(1.0, s, 4);
        double h = 1e-6;
        for (int k = 0; k <= 3; ++k) {
            double fd = (expr::bump_jet(1.0, s + h, k)[k] - expr::bump_jet(1.0, s - h, k)[k]) / (2 * h);
            CHECK(std::abs(fd - jet[k + 1]) <=
                  std::max(1e-4 * std::max(std::abs(fd), std::abs(jet[k + 1])), 1e-6));
        }
    }
    // smooth matching at the edges: all derivatives vanish
    for (double s : {1.0, 2.0, -1.0, -2.0}) {
        auto jet = expr::bump_jet(1.0, s, 4);
        for (int k = 1; k <= 4; ++k) CHECK(jet[k] == 0.0);
    }
}

TEST_CASE("symbolic derivatives: hand-checked cases") {
    CHECK(expr::to_string(expr::diff_u(expr::parse("u1*u2", 2), 1)) == "u2");
    CHECK(expr::to_string(expr::diff_u(expr::parse("sin(u1)", 1), 1)) == "cos(u1)");
    Expr d = expr::diff_u(expr::parse("u1^3 - u1", 1), 1);
    CHECK(expr::eval(d, 0.0, Eigen::VectorXd::Constant(1, 2.0)) == 11.0);
}

TEST_CASE("symbolic derivatives agree with central finite differences") {
    check_derivative_against_fd("u1^3 - u1", 1, 11);
    check_derivative_against_fd("sin(u1)*cos(u2)", 2, 12);
    check_derivative_against_fd("exp(u2)*tanh(u1)", 2, 13);
    check_derivative_against_fd("bump(1, u1^2 + u2^2)", 2, 14);
    check_derivative_against_fd("u1/(2 + u2^2)", 2, 15);
    check_derivative_against_fd("x*u1^2 - u2", 2, 16);
    check_derivative_against_fd("bump(2, u1)*u1^3", 1, 17);
}

TEST_CASE("print then re-parse is evaluation-equivalent") {
    const char* sources[] = {
        "u1*u2 + sin(x)",
        "2*x^2 - 1",
        "-x^2 + u1*(u2 - 3)/(1 + u1^2)",
        "bump(1.5, u1^2 + u2^2)*exp(-u1)",
        "tanh(u1 - u2)^3 - cos(x*u2)",
        "1 - 2 - 3*u1^-2",
    };
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ux(0.0, 1.0), uu(0.1, 2.2);
    for (const char* src : sources) {
        Expr e = expr::parse(src, 2);
        Expr e2 = expr::parse(expr::to_string(e), 2);
        CHECK(expr::to_string(e2) == expr::to_string(e));
        for (int trial = 0; trial < 100; ++trial) {
            double x = ux(rng);
            Eigen::VectorXd u = vec2(uu(rng), uu(rng));
            CHECK(expr::eval(e2, x, u) == expr::eval(e, x, u));
        }
    }
    // derivative trees (contain bump_d) must round-trip as well
    Expr d = expr::diff_u(expr::parse("bump(1, u1^2 + u2^2)", 2), 1);
    Expr d2 = expr::parse(expr::to_string(d), 2);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd u = vec2(uu(rng), uu(rng));
        CHECK(expr::eval(d2, 0.0, u) == expr::eval(d, 0.0, u));
    }
}

TEST_CASE("array evaluation matches pointwise evaluation") {
    Expr e = expr::parse("bump(1, u1^2 + u2^2)*sin(x) + u2/(2 + u1^2)", 2);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(0.0, 1.0), uu(-2.2, 2.2);
    int n = 64;
    Eigen::ArrayXd x(n);
    std::vector<Eigen::ArrayXd> u{Eigen::ArrayXd(n), Eigen::ArrayXd(n)};
    for (int p = 0; p < n; ++p) {
        x(p) = ux(rng);
        u[0](p) = uu(rng);
        u[1](p) = uu(rng);
    }
    Eigen::ArrayXd out = expr::eval_array(e, x, u);
    for (int p = 0; p < n; ++p) {
        CHECK(out(p) == expr::eval(e, x(p), vec2(u[0](p), u[1](p))));
    }
}

TEST_CASE("substitute_u composes with a linear change of variables") {
    Expr e = expr::parse("u1^2 + sin(u2) - bump(1, u1*u2)", 2);
    std::vector<Expr> repl{expr::parse("u1 + u2", 2), expr::parse("u1 - u2", 2)};
    Expr s = expr::substitute_u(e, repl);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> uu(-1.5, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        double a = uu(rng), b = uu(rng);
        CHECK(expr::eval(s, 0.3, vec2(a, b)) ==
              doctest::Approx(expr::eval(e, 0.3, vec2(a + b, a - b))).epsilon(1e-14));
    }
}

TEST_CASE("constant folding keeps trivial identities exact") {
    CHECK(expr::is_zero(expr::diff_u(expr::parse("sin(x)", 1), 1)));
    CHECK(expr::to_string(expr::parse("0*u1 + x", 1)) == "x");
    CHECK(expr::to_string(expr::parse("1*u1", 1)) == "u1");
    CHECK(expr::to_string(expr::parse("2^3", 1)) == "8");
}
