#include "findim/system.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "findim/error.hpp"

namespace findim::system {

using expr::Expr;

Diagonalization diagonalize(const Eigen::MatrixXd& D) {
    int m = static_cast<int>(D.rows());
    if (m < 1 || D.cols() != m) throw Error("diagonalize: D must be square and nonempty");
    if (m > 16) throw Error("diagonalize: component count capped at 16");

    Eigen::EigenSolver<Eigen::MatrixXd> es(D);
    if (es.info() != Eigen::Success) throw NotDiagonalizable("eigensolver failed to converge");
    for (int j = 0; j < m; ++j) {
        if (std::abs(es.eigenvalues()(j).imag()) > 1e-10)
            throw NotDiagonalizable("D has a complex eigenvalue pair");
        if (!(es.eigenvalues()(j).real() > 0.0))
            throw NotPositive("D has an eigenvalue <= 0");
    }

    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
        return es.eigenvalues()(a).real() < es.eigenvalues()(b).real();
    });

    Diagonalization dg;
    dg.dbar.resize(m);
    dg.C.resize(m, m);
    for (int k = 0; k < m; ++k) {
        dg.dbar(k) = es.eigenvalues()(perm[k]).real();
        Eigen::VectorXd col = es.eigenvectors().col(perm[k]).real();
        // deterministic sign: the largest-magnitude entry points up
        int imax = 0;
        for (int i = 1; i < m; ++i)
            if (std::abs(col(i)) > std::abs(col(imax))) imax = i;
        if (col(imax) < 0.0) col = -col;
        dg.C.col(k) = col;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(dg.C);
    double smin = svd.singularValues()(m - 1);
    if (smin <= 0.0 || svd.singularValues()(0) / smin > 1e12)
        throw NotDiagonalizable("eigenvector matrix is numerically singular (defective D)");
    dg.cond = svd.singularValues()(0) / smin;
    dg.Cinv = dg.C.inverse();

    double resid = (D - dg.C * dg.dbar.asDiagonal() * dg.Cinv).norm();
    if (resid > 1e-10 * std::max(1.0, D.norm()))
        throw NotDiagonalizable("reconstruction residual too large");
    return dg;
}

namespace {

// Linear combination sum_k coef[k] * term[k] as an expression, zeros dropped.
Expr combination(const std::vector<double>& coef, const std::vector<Expr>& term) {
    Expr acc = expr::constant(0.0);
    for (std::size_t k = 0; k < coef.size(); ++k) {
        if (coef[k] == 0.0 || expr::is_zero(term[k])) continue;
        acc = expr::add(acc, expr::mul(expr::constant(coef[k]), term[k]));
    }
    return acc;
}

// Sampled f(x, w) as a numeric matrix.
Eigen::MatrixXd eval_f(const SystemSpec& spec, double x, const Eigen::VectorXd& w) {
    Eigen::MatrixXd F(spec.m, spec.m);
    for (int i = 0; i < spec.m; ++i)
        for (int p = 0; p < spec.m; ++p) F(i, p) = expr::eval(spec.f[i][p], x, w);
    return F;
}

double scaled_tol(const SystemSpec& spec, double max_f_norm) {
    return std::max(1e-12, 1e-8 * (1.0 + spec.D.norm() * max_f_norm));
}

Expr sum_of_squares(int m) {
    Expr s = expr::constant(0.0);
    for (int i = 1; i <= m; ++i) s = expr::add(s, expr::pow(expr::var_u(i), 2));
    return s;
}

}  // namespace

SystemSpec transform_system(const SystemSpec& spec, const Diagonalization& dg) {
    int m = spec.m;
    SystemSpec out;
    out.m = m;
    out.D = dg.dbar.asDiagonal();
    out.alpha = spec.alpha;
    out.cutoff = spec.cutoff;

    // u = C v as expression substitutions
    std::vector<Expr> repl(m);
    for (int i = 0; i < m; ++i) {
        std::vector<double> coef(m);
        std::vector<Expr> vars(m);
        for (int j = 0; j < m; ++j) {
            coef[j] = dg.C(i, j);
            vars[j] = expr::var_u(j + 1);
        }
        repl[i] = combination(coef, vars);
    }

    std::vector<std::vector<Expr>> fs(m, std::vector<Expr>(m));
    std::vector<Expr> gs(m);
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < m; ++p) fs[i][p] = expr::substitute_u(spec.f[i][p], repl);
        gs[i] = expr::substitute_u(spec.g[i], repl);
    }

    out.f.assign(m, std::vector<Expr>(m));
    out.g.resize(m);
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
            std::vector<double> coef;
            std::vector<Expr> term;
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < m; ++p) {
                    coef.push_back(dg.Cinv(a, i) * dg.C(p, b));
                    term.push_back(fs[i][p]);
                }
            out.f[a][b] = combination(coef, term);
        }
        std::vector<double> coef;
        for (int i = 0; i < m; ++i) coef.push_back(dg.Cinv(a, i));
        out.g[a] = combination(coef, gs);
    }
    return out;
}

ConsistencyReport check_consistency(const SystemSpec& spec, const HullSample& hull) {
    if (hull.pairs() == 0) throw Error("check_consistency: empty hull sample");
    ConsistencyReport rep;
    double max_f = 0.0;
    int best_ix = -1, best_pair = -1;
    int nx = static_cast<int>(hull.x.size());
    for (int p = 0; p < hull.pairs(); ++p) {
        double tau = hull.tau[p];
        Eigen::MatrixXd w = tau * hull.u[p] + (1.0 - tau) * hull.v[p];
        for (int ix = 0; ix < nx; ++ix) {
            Eigen::MatrixXd F = eval_f(spec, hull.x(ix), w.col(ix));
            max_f = std::max(max_f, F.norm());
            double c = (spec.D * F - F * spec.D).norm();
            bool better = c > rep.max_commutator ||
                          (c == rep.max_commutator && best_ix >= 0 &&
                           std::make_pair(ix, p) < std::make_pair(best_ix, best_pair));
            if (best_ix < 0 || better) {
                rep.max_commutator = c;
                best_ix = ix;
                best_pair = p;
                rep.argmax_x = hull.x(ix);
                rep.argmax_pair = p;
                rep.argmax_tau = tau;
            }
        }
    }
    rep.tol = scaled_tol(spec, max_f);
    rep.pass = rep.max_commutator <= rep.tol;
    return rep;
}

BlockStructure block_structure(const Eigen::MatrixXd& D) {
    int m = static_cast<int>(D.rows());
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < m; ++p)
            if (i != p && D(i, p) != 0.0) throw Error("block_structure: D must be diagonal");
        if (!(D(i, i) > 0.0)) throw NotPositive("block_structure: D must be positive");
    }
    BlockStructure bs;
    std::vector<bool> used(m, false);
    for (int i = 0; i < m; ++i) {
        if (used[i]) continue;
        std::vector<int> grp{i + 1};
        used[i] = true;
        for (int p = i + 1; p < m; ++p) {
            if (!used[p] && std::abs(D(p, p) - D(i, i)) <= 1e-12 * std::abs(D(i, i))) {
                grp.push_back(p + 1);
                used[p] = true;
            }
        }
        bs.groups.push_back(std::move(grp));
    }
    return bs;
}

bool respects_blocks(const BlockStructure& bs, const SystemSpec& spec, const HullSample& hull) {
    std::vector<int> group_of(spec.m);
    for (std::size_t gi = 0; gi < bs.groups.size(); ++gi)
        for (int idx : bs.groups[gi]) group_of[idx - 1] = static_cast<int>(gi);

    double max_f = 0.0, max_off = 0.0;
    int nx = static_cast<int>(hull.x.size());
    for (int p = 0; p < hull.pairs(); ++p) {
        double tau = hull.tau[p];
        Eigen::MatrixXd w = tau * hull.u[p] + (1.0 - tau) * hull.v[p];
        for (int ix = 0; ix < nx; ++ix) {
            Eigen::MatrixXd F = eval_f(spec, hull.x(ix), w.col(ix));
            max_f = std::max(max_f, F.norm());
            for (int i = 0; i < spec.m; ++i)
                for (int l = 0; l < spec.m; ++l)
                    if (group_of[i] != group_of[l]) max_off = std::max(max_off, std::abs(F(i, l)));
        }
    }
    return max_off <= scaled_tol(spec, max_f);
}

SystemSpec apply_auto_cutoff(const SystemSpec& spec, double R) {
    if (!(R > 0.0)) throw Error("auto-cutoff radius must be positive");
    SystemSpec out = spec;
    Expr cut = expr::bump(R, sum_of_squares(spec.m));
    for (int i = 0; i < spec.m; ++i) {
        for (int p = 0; p < spec.m; ++p)
            if (!expr::is_zero(out.f[i][p])) out.f[i][p] = expr::mul(out.f[i][p], cut);
        if (!expr::is_zero(out.g[i])) out.g[i] = expr::mul(out.g[i], cut);
    }
    out.cutoff = R;
    return out;
}

double boundary_defect(const SystemSpec& spec) {
    double worst = 0.0;
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(spec.m);
    for (double x : {0.0, 1.0}) {
        for (int i = 0; i < spec.m; ++i) {
            for (int p = 0; p < spec.m; ++p)
                worst = std::max(worst, std::abs(expr::eval(spec.f[i][p], x, zero)));
            worst = std::max(worst, std::abs(expr::eval(spec.g[i], x, zero)));
        }
    }
    return worst;
}

namespace {

// Bistable reaction with a cutoff far outside the attractor: the strength 25
// exceeds the stabilising d pi^2 of every family below, so the origin is
// unstable and trajectories settle near the +-1 wells.
Expr reaction(int i, int m) {
    std::string ui = "u" + std::to_string(i);
    std::string s = "25*(" + ui + " - " + ui + "^3)*bump(4, ";
    for (int j = 1; j <= m; ++j) s += (j > 1 ? " + u" : "u") + std::to_string(j) + "^2";
    s += ")";
    return expr::parse(s, m);
}

SystemSpec base_spec(int m, const Eigen::VectorXd& d) {
    SystemSpec s;
    s.m = m;
    s.D = d.asDiagonal();
    s.f.assign(m, std::vector<Expr>(m, expr::constant(0.0)));
    s.g.resize(m);
    for (int i = 1; i <= m; ++i) s.g[i - 1] = reaction(i, m);
    s.alpha = 0.8;
    s.cutoff = 4.0;
    return s;
}

}  // namespace

SystemSpec example_family(const std::string& kind) {
    if (kind == "scalar_diffusion") {
        Eigen::VectorXd d(2);
        d << 1.0, 1.0;
        return base_spec(2, d);
    }
    if (kind == "commuting_family") {
        // f = D1 * phi with diagonal D1 = diag{2, 5}: commutes with D = diag{1, 2}.
        // The 4x(1-x) taper keeps f zero on the boundary at u = 0.
        Eigen::VectorXd d(2);
        d << 1.0, 2.0;
        SystemSpec s = base_spec(2, d);
        std::string phi = "sin(x)*4*x*(1 - x)*bump(2, u1^2 + u2^2)";
        s.f[0][0] = expr::parse("2*" + phi, 2);
        s.f[1][1] = expr::parse("5*" + phi, 2);
        return s;
    }
    if (kind == "block_family") {
        // D = diag{1, 1, 2}: f may be full on the {1,2} block, diagonal on {3}.
        Eigen::VectorXd d(3);
        d << 1.0, 1.0, 2.0;
        SystemSpec s = base_spec(3, d);
        std::string cut = "bump(2, u1^2 + u2^2 + u3^2)";
        std::string taper = "4*x*(1 - x)";
        s.f[0][0] = expr::parse(taper + "*" + cut, 3);
        s.f[0][1] = expr::parse(taper + "*u1*" + cut, 3);
        s.f[1][0] = expr::parse(taper + "*u2*" + cut, 3);
        s.f[1][1] = expr::parse("0.5*" + taper + "*" + cut, 3);
        s.f[2][2] = expr::parse(taper + "*cos(u3)*" + cut, 3);
        return s;
    }
    if (kind == "violating_family") {
        // Upper-triangular f with unequal d: D f - f D has norm 4x(1-x)
        // near the hull, far above tolerance.
        Eigen::VectorXd d(2);
        d << 1.0, 2.0;
        SystemSpec s = base_spec(2, d);
        s.f[0][1] = expr::parse("4*x*(1 - x)*bump(2, u1^2)", 2);
        return s;
    }
    throw Error("unknown example kind '" + kind + "'");
}

}  // namespace findim::system
