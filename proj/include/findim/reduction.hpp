#ifndef FINDIM_REDUCTION_HPP
#define FINDIM_REDUCTION_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "findim/pde.hpp"
#include "findim/system.hpp"

namespace findim::reduction {

/// An m x m matrix sampled on the uniform grid 0 = x_0 < ... < x_G = 1.
struct MatrixFieldSample {
    Eigen::ArrayXd x;
    std::vector<Eigen::MatrixXd> value;
    std::string tag;  // which field this is: B, B0, U, Uinv or Q

    int points() const { return static_cast<int>(value.size()); }
    int segments() const { return points() - 1; }
    double h() const { return 1.0 / segments(); }
    int dim() const { return value.empty() ? 0 : static_cast<int>(value.front().rows()); }
};

/// Two attractor states with everything the pair operators need synthesized
/// on a shared uniform grid.
struct PairContext {
    system::SystemSpec spec;
    pde::GalerkinState u, v;
    Eigen::ArrayXd x;
    std::vector<Eigen::ArrayXd> uval, vval, uxval, vxval;  // one array per component

    int m() const { return spec.m; }
    int grid() const { return static_cast<int>(x.size()) - 1; }
};

/// grid must be even (the residual norms use Simpson weights) and >= 8.
PairContext make_pair_context(const system::SystemSpec& spec, const pde::GalerkinState& u,
                              const pde::GalerkinState& v, int grid);

/// Integral over tau in [0,1] of f(x, w) with w = tau u + (1-tau) v,
/// Gauss-Legendre with n_tau nodes, entrywise per grid point.
MatrixFieldSample compute_B(const PairContext& ctx, int n_tau);

/// Same quadrature applied to the Jacobian integrand whose entry (i,l) is
/// sum_p df_ip/du_l(x,w) (w_x)_p + dg_i/du_l(x,w).  This is the convention
/// that makes G(u) - G(v) = D h_xx + B0 h + B h_x an identity.
MatrixFieldSample compute_B0(const PairContext& ctx, int n_tau);

struct TransformPair {
    MatrixFieldSample U, Uinv;
    double det_error;       // worst relative defect of the Liouville determinant
    double product_defect;  // max over grid of |U Uinv - I|_F
    double max_cond;        // max over grid of |U|_F |Uinv|_F
};

/// Classical RK4 across the grid for U_x = -1/2 D^-1 B U, U(0) = I, with B
/// interpolated at half-points to 4th order.  Uinv integrates its own ODE
/// (Uinv)_x = +1/2 Uinv D^-1 B so the pair stays accurate even when U is
/// poorly conditioned.  Throws IllConditioned past |U||Uinv| = 1e8.
TransformPair solve_U(const MatrixFieldSample& B, const Eigen::MatrixXd& D);

struct CommutationReport {
    double max_comm;  // max over grid of |D U(x) - U(x) D|_F
    double argmax_x;
};

CommutationReport check_commutation(const MatrixFieldSample& U, const Eigen::MatrixXd& D);

/// Q = B0 - 1/2 B_x - 1/4 B D^-1 B with B_x from 4th-order differences.
MatrixFieldSample assemble_Q(const MatrixFieldSample& B0, const MatrixFieldSample& B,
                             const Eigen::MatrixXd& D);

struct QStats {
    double max_norm;         // sup over the grid of |Q(x)|_F
    double max_second_diff;  // sup of |Q(x-h) - 2Q(x) + Q(x+h)|_F / h^2
};

QStats q_stats(const MatrixFieldSample& Q);

/// Relative L2 residual of G(u) - G(v) = D h_xx + B0 h + B h_x with h = u - v;
/// exact in the continuum, so this measures quadrature error only.
/// Throws DegeneratePair when |h| < 1e-12.
double decomposition_residual(const PairContext& ctx, const MatrixFieldSample& B0,
                              const MatrixFieldSample& B);

struct SimilarityReport {
    std::vector<double> eigenvalues;  // real parts, ascending
    std::vector<double> deviations;   // lowest quartile vs the exact spectrum
    double eig_deviation;             // max of deviations
    double max_imag_rel;              // worst relative imaginary part in the quartile
    int quartile;
};

/// Discretizes T = -D U d^2/dx^2 Uinv on the grid carried by U (second-order
/// Dirichlet differences), solves the dense eigenproblem, and compares the
/// lowest quartile against the exact eigenvalues of -D d^2/dx^2; d holds the
/// diffusion coefficients of the (diagonal) system.
SimilarityReport similarity_spectrum_check(const Eigen::VectorXd& d, const TransformPair& t);

/// Columns x,i,j,value; row-major in (i,j), x ascending, indices 1-based.
void write_matrix_csv(std::ostream& os, const MatrixFieldSample& field);

}  // namespace findim::reduction

#endif
