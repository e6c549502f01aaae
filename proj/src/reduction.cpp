#include "findim/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>

#include "findim/error.hpp"
#include "findim/numerics.hpp"
#include "findim/spectrum.hpp"
#include "findim/util.hpp"

namespace findim::reduction {

namespace {

std::vector<Eigen::ArrayXd> rows_of(const Eigen::MatrixXd& vals) {
    std::vector<Eigen::ArrayXd> out;
    out.reserve(vals.rows());
    for (int i = 0; i < vals.rows(); ++i) out.push_back(vals.row(i).transpose().array());
    return out;
}

MatrixFieldSample zero_field(const PairContext& ctx, std::string tag) {
    MatrixFieldSample f;
    f.x = ctx.x;
    f.value.assign(ctx.x.size(), Eigen::MatrixXd::Zero(ctx.m(), ctx.m()));
    f.tag = std::move(tag);
    return f;
}

void require_same_grid(const MatrixFieldSample& a, const MatrixFieldSample& b) {
    if (a.points() != b.points() || a.dim() != b.dim())
        throw Error("matrix fields sampled on different grids");
}

// tau-quadrature driver shared by compute_B and compute_B0: `emit` receives
// the convex state (and its x-derivative) at one tau node and accumulates
// weight * integrand into the field.
template <typename Emit>
void integrate_tau(const PairContext& ctx, int n_tau, const Emit& emit) {
    if (n_tau < 2) throw Error("tau quadrature needs at least 2 nodes");
    Quadrature q = gauss_legendre_01(n_tau);
    int m = ctx.m();
    std::vector<Eigen::ArrayXd> w(m), wx(m);
    for (int k = 0; k < n_tau; ++k) {
        double tau = q.nodes(k);
        for (int i = 0; i < m; ++i) {
            w[i] = tau * ctx.uval[i] + (1.0 - tau) * ctx.vval[i];
            wx[i] = tau * ctx.uxval[i] + (1.0 - tau) * ctx.vxval[i];
        }
        emit(q.weights(k), w, wx);
    }
}

}  // namespace

PairContext make_pair_context(const system::SystemSpec& spec, const pde::GalerkinState& u,
                              const pde::GalerkinState& v, int grid) {
    if (u.m() != spec.m || v.m() != spec.m) throw Error("pair states disagree with the spec");
    if (u.modes() != v.modes()) throw Error("pair states have different mode counts");
    if (grid < 8 || grid % 2 != 0) throw Error("pair grid must be even and at least 8");
    PairContext ctx;
    ctx.spec = spec;
    ctx.u = u;
    ctx.v = v;
    ctx.x = Eigen::ArrayXd::LinSpaced(grid + 1, 0.0, 1.0);
    ctx.uval = rows_of(pde::synthesize(u, ctx.x, 0));
    ctx.vval = rows_of(pde::synthesize(v, ctx.x, 0));
    ctx.uxval = rows_of(pde::synthesize(u, ctx.x, 1));
    ctx.vxval = rows_of(pde::synthesize(v, ctx.x, 1));
    return ctx;
}

MatrixFieldSample compute_B(const PairContext& ctx, int n_tau) {
    MatrixFieldSample B = zero_field(ctx, "B");
    int m = ctx.m();
    integrate_tau(ctx, n_tau,
                  [&](double wq, const std::vector<Eigen::ArrayXd>& w,
                      const std::vector<Eigen::ArrayXd>&) {
                      for (int i = 0; i < m; ++i)
                          for (int l = 0; l < m; ++l) {
                              if (expr::is_zero(ctx.spec.f[i][l])) continue;
                              Eigen::ArrayXd vals = expr::eval_array(ctx.spec.f[i][l], ctx.x, w);
                              for (int p = 0; p < ctx.x.size(); ++p) B.value[p](i, l) += wq * vals(p);
                          }
                  });
    return B;
}

MatrixFieldSample compute_B0(const PairContext& ctx, int n_tau) {
    int m = ctx.m();
    // symbolic Jacobians, shared across tau nodes and grid points
    std::vector<std::vector<std::vector<expr::Expr>>> dfdu(m);
    std::vector<std::vector<expr::Expr>> dgdu(m);
    for (int i = 0; i < m; ++i) {
        dfdu[i].resize(m);
        for (int p = 0; p < m; ++p) {
            for (int l = 1; l <= m; ++l) dfdu[i][p].push_back(expr::diff_u(ctx.spec.f[i][p], l));
        }
        for (int l = 1; l <= m; ++l) dgdu[i].push_back(expr::diff_u(ctx.spec.g[i], l));
    }

    MatrixFieldSample B0 = zero_field(ctx, "B0");
    integrate_tau(ctx, n_tau,
                  [&](double wq, const std::vector<Eigen::ArrayXd>& w,
                      const std::vector<Eigen::ArrayXd>& wx) {
                      for (int i = 0; i < m; ++i)
                          for (int l = 0; l < m; ++l) {
                              Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(ctx.x.size());
                              bool any = false;
                              for (int p = 0; p < m; ++p) {
                                  if (expr::is_zero(dfdu[i][p][l])) continue;
                                  acc += expr::eval_array(dfdu[i][p][l], ctx.x, w) * wx[p];
                                  any = true;
                              }
                              if (!expr::is_zero(dgdu[i][l])) {
                                  acc += expr::eval_array(dgdu[i][l], ctx.x, w);
                                  any = true;
                              }
                              if (!any) continue;
                              for (int p = 0; p < ctx.x.size(); ++p) B0.value[p](i, l) += wq * acc(p);
                          }
                  });
    return B0;
}

TransformPair solve_U(const MatrixFieldSample& B, const Eigen::MatrixXd& D) {
    int m = B.dim();
    int G = B.segments();
    if (G < 8) throw Error("solve_U: grid too coarse for 4th-order interpolation");
    if (D.rows() != m || D.cols() != m) throw Error("solve_U: D and B dimensions disagree");
    Eigen::MatrixXd A(m, m);  // A(x) = -1/2 D^-1 B(x)
    Eigen::MatrixXd Dinv = D.inverse();
    double h = B.h();

    // 4th-order midpoint interpolation of B on interval [x_i, x_{i+1}]
    auto half = [&](int i) -> Eigen::MatrixXd {
        const auto& v = B.value;
        if (i == 0) return (5.0 * v[0] + 15.0 * v[1] - 5.0 * v[2] + v[3]) / 16.0;
        if (i == G - 1) return (v[G - 3] - 5.0 * v[G - 2] + 15.0 * v[G - 1] + 5.0 * v[G]) / 16.0;
        return (-v[i - 1] + 9.0 * v[i] + 9.0 * v[i + 1] - v[i + 2]) / 16.0;
    };

    TransformPair out;
    out.U.x = B.x;
    out.U.tag = "U";
    out.Uinv.x = B.x;
    out.Uinv.tag = "Uinv";
    out.U.value.assign(G + 1, Eigen::MatrixXd());
    out.Uinv.value.assign(G + 1, Eigen::MatrixXd());
    out.U.value[0] = Eigen::MatrixXd::Identity(m, m);
    out.Uinv.value[0] = Eigen::MatrixXd::Identity(m, m);

    for (int i = 0; i < G; ++i) {
        Eigen::MatrixXd A0 = -0.5 * Dinv * B.value[i];
        Eigen::MatrixXd Ah = -0.5 * Dinv * half(i);
        Eigen::MatrixXd A1 = -0.5 * Dinv * B.value[i + 1];

        const Eigen::MatrixXd& U = out.U.value[i];
        Eigen::MatrixXd k1 = A0 * U;
        Eigen::MatrixXd k2 = Ah * (U + 0.5 * h * k1);
        Eigen::MatrixXd k3 = Ah * (U + 0.5 * h * k2);
        Eigen::MatrixXd k4 = A1 * (U + h * k3);
        out.U.value[i + 1] = U + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        const Eigen::MatrixXd& V = out.Uinv.value[i];
        Eigen::MatrixXd j1 = -V * A0;
        Eigen::MatrixXd j2 = -(V + 0.5 * h * j1) * Ah;
        Eigen::MatrixXd j3 = -(V + 0.5 * h * j2) * Ah;
        Eigen::MatrixXd j4 = -(V + h * j3) * A1;
        out.Uinv.value[i + 1] = V + (h / 6.0) * (j1 + 2.0 * j2 + 2.0 * j3 + j4);
    }

    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
    out.max_cond = 0.0;
    out.product_defect = 0.0;
    for (int i = 0; i <= G; ++i) {
        if (!out.U.value[i].allFinite() || !out.Uinv.value[i].allFinite())
            throw IllConditioned("solve_U: transformation overflowed");
        out.max_cond =
            std::max(out.max_cond, out.U.value[i].norm() * out.Uinv.value[i].norm());
        out.product_defect =
            std::max(out.product_defect, (out.U.value[i] * out.Uinv.value[i] - I).norm());
    }
    if (out.max_cond > 1e8)
        throw IllConditioned("solve_U: |U||Uinv| exceeds 1e8, transformation unusable");
    if (out.product_defect > 1e-9)
        throw Error("solve_U: U and Uinv drifted apart beyond 1e-9");

    // Liouville: det U(x) must equal exp(-1/2 int_0^x tr(D^-1 B))
    std::vector<double> tr(G + 1);
    for (int i = 0; i <= G; ++i) tr[i] = (Dinv * B.value[i]).trace();
    std::vector<double> itr = cumulative_integral_4th(tr, h);
    out.det_error = 0.0;
    for (int i = 0; i <= G; ++i) {
        double want = std::exp(-0.5 * itr[i]);
        double got = out.U.value[i].determinant();
        out.det_error = std::max(out.det_error, std::abs(got - want) / std::abs(want));
    }
    if (out.det_error > 1e-8)
        throw Error("solve_U: Liouville determinant check failed; grid too coarse");
    return out;
}

CommutationReport check_commutation(const MatrixFieldSample& U, const Eigen::MatrixXd& D) {
    CommutationReport r{0.0, 0.0};
    for (int i = 0; i < U.points(); ++i) {
        double defect = (D * U.value[i] - U.value[i] * D).norm();
        if (defect > r.max_comm) {
            r.max_comm = defect;
            r.argmax_x = U.x(i);
        }
    }
    return r;
}

MatrixFieldSample assemble_Q(const MatrixFieldSample& B0, const MatrixFieldSample& B,
                             const Eigen::MatrixXd& D) {
    require_same_grid(B0, B);
    std::vector<Eigen::MatrixXd> Bx = derivative_4th(B.value, B.h());
    Eigen::MatrixXd Dinv = D.inverse();
    MatrixFieldSample Q;
    Q.x = B.x;
    Q.tag = "Q";
    Q.value.reserve(B.points());
    for (int i = 0; i < B.points(); ++i)
        Q.value.push_back(B0.value[i] - 0.5 * Bx[i] - 0.25 * B.value[i] * Dinv * B.value[i]);
    return Q;
}

QStats q_stats(const MatrixFieldSample& Q) {
    QStats s{0.0, 0.0};
    double h2 = Q.h() * Q.h();
    for (int i = 0; i < Q.points(); ++i) {
        s.max_norm = std::max(s.max_norm, Q.value[i].norm());
        if (i > 0 && i + 1 < Q.points()) {
            double d2 = (Q.value[i - 1] - 2.0 * Q.value[i] + Q.value[i + 1]).norm() / h2;
            s.max_second_diff = std::max(s.max_second_diff, d2);
        }
    }
    return s;
}

namespace {

// G(s) = D s_xx + f(x,s) s_x + g(x,s) on the context grid, one row per component.
Eigen::MatrixXd apply_G(const PairContext& ctx, const pde::GalerkinState& s) {
    int m = ctx.m();
    Eigen::MatrixXd sxx = pde::synthesize(s, ctx.x, 2);
    std::vector<Eigen::ArrayXd> val = rows_of(pde::synthesize(s, ctx.x, 0));
    std::vector<Eigen::ArrayXd> dval = rows_of(pde::synthesize(s, ctx.x, 1));
    Eigen::MatrixXd out = ctx.spec.D * sxx;
    for (int i = 0; i < m; ++i) {
        Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(ctx.x.size());
        for (int p = 0; p < m; ++p) {
            if (expr::is_zero(ctx.spec.f[i][p])) continue;
            acc += expr::eval_array(ctx.spec.f[i][p], ctx.x, val) * dval[p];
        }
        if (!expr::is_zero(ctx.spec.g[i])) acc += expr::eval_array(ctx.spec.g[i], ctx.x, val);
        out.row(i) += acc.matrix().transpose();
    }
    return out;
}

}  // namespace

double decomposition_residual(const PairContext& ctx, const MatrixFieldSample& B0,
                              const MatrixFieldSample& B) {
    require_same_grid(B0, B);
    if (B.points() != static_cast<int>(ctx.x.size()))
        throw Error("matrix fields and pair context use different grids");
    pde::GalerkinState hs;
    hs.c = ctx.u.c - ctx.v.c;
    Eigen::MatrixXd h = pde::synthesize(hs, ctx.x, 0);
    Eigen::MatrixXd hx = pde::synthesize(hs, ctx.x, 1);
    Eigen::MatrixXd hxx = pde::synthesize(hs, ctx.x, 2);

    Eigen::ArrayXd w = simpson_weights(ctx.grid());
    double hnorm2 = 0.0;
    for (int p = 0; p < ctx.x.size(); ++p) hnorm2 += w(p) * h.col(p).squaredNorm();
    double hnorm = std::sqrt(hnorm2);
    if (hnorm < 1e-12) throw DegeneratePair("pair states coincide; residual undefined");

    Eigen::MatrixXd lhs = apply_G(ctx, ctx.u) - apply_G(ctx, ctx.v);
    double r2 = 0.0;
    for (int p = 0; p < ctx.x.size(); ++p) {
        Eigen::VectorXd rhs =
            ctx.spec.D * hxx.col(p) + B0.value[p] * h.col(p) + B.value[p] * hx.col(p);
        r2 += w(p) * (lhs.col(p) - rhs).squaredNorm();
    }
    return std::sqrt(r2) / hnorm;
}

SimilarityReport similarity_spectrum_check(const Eigen::VectorXd& d, const TransformPair& t) {
    int m = t.U.dim();
    if (d.size() != m) throw Error("similarity check: d and U dimensions disagree");
    int G = t.U.segments();
    int n = m * (G - 1);
    double ih2 = static_cast<double>(G) * G;  // 1/h^2
    Eigen::MatrixXd D = d.asDiagonal();

    // block rows of T h = -D U (second difference of Uinv h), Dirichlet ends
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < G; ++i) {
        Eigen::MatrixXd DU = ih2 * D * t.U.value[i];
        int r = (i - 1) * m;
        if (i > 1) T.block(r, r - m, m, m) = -DU * t.Uinv.value[i - 1];
        T.block(r, r, m, m) = 2.0 * DU * t.Uinv.value[i];
        if (i < G - 1) T.block(r, r + m, m, m) = -DU * t.Uinv.value[i + 1];
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(T, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> eig(n);
    for (int k = 0; k < n; ++k) eig[k] = es.eigenvalues()(k);
    std::sort(eig.begin(), eig.end(),
              [](const auto& a, const auto& b) { return a.real() < b.real(); });

    SimilarityReport rep;
    rep.eigenvalues.reserve(n);
    for (const auto& z : eig) rep.eigenvalues.push_back(z.real());
    rep.quartile = std::max(1, n / 4);
    spectrum::SpectrumTable exact = spectrum::enumerate_spectrum(d, rep.quartile);
    rep.eig_deviation = 0.0;
    rep.max_imag_rel = 0.0;
    for (int k = 0; k < rep.quartile; ++k) {
        double want = exact.entries[k].lambda;
        rep.deviations.push_back(std::abs(eig[k].real() - want) / want);
        rep.eig_deviation = std::max(rep.eig_deviation, rep.deviations.back());
        rep.max_imag_rel =
            std::max(rep.max_imag_rel, std::abs(eig[k].imag()) / std::abs(eig[k].real()));
    }
    return rep;
}

void write_matrix_csv(std::ostream& os, const MatrixFieldSample& field) {
    os << "x,i,j,value\n";
    int m = field.dim();
    for (int p = 0; p < field.points(); ++p)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                os << format_double(field.x(p)) << ',' << i + 1 << ',' << j + 1 << ','
                   << format_double(field.value[p](i, j)) << '\n';
}

}  // namespace findim::reduction
