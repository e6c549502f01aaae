#ifndef FINDIM_SYSTEM_HPP
#define FINDIM_SYSTEM_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "findim/expr.hpp"

namespace findim::system {

/// The problem du/dt = D u_xx + f(x,u) u_x + g(x,u) on (0,1), u(0)=u(1)=0.
struct SystemSpec {
    int m = 0;
    Eigen::MatrixXd D;                       // m x m, similar to a positive diagonal
    std::vector<std::vector<expr::Expr>> f;  // m x m convection matrix entries
    std::vector<expr::Expr> g;               // m reaction entries
    double alpha = 0.8;                      // phase-space exponent, in (3/4, 1)
    std::optional<double> cutoff;            // radius of an applied auto-cutoff
};

struct Diagonalization {
    Eigen::MatrixXd C;     // columns: unit eigenvectors of D
    Eigen::MatrixXd Cinv;
    Eigen::VectorXd dbar;  // eigenvalues, ascending, all positive
    double cond = 0.0;     // condition number of C
};

/// Dense eigendecomposition D = C diag(dbar) C^-1 with dbar ascending.
/// Throws NotDiagonalizable (complex or defective spectrum) or NotPositive.
Diagonalization diagonalize(const Eigen::MatrixXd& D);

/// Change of variables u = C v: D -> dbar, f -> C^-1 f(x, Cv) C, g -> C^-1 g(x, Cv).
SystemSpec transform_system(const SystemSpec& spec, const Diagonalization& dg);

/// Attractor hull probe: convex combinations w = tau u + (1-tau) v of sampled
/// state pairs, stored as values on a shared x grid (one m x nx matrix per
/// pair and side).
struct HullSample {
    Eigen::ArrayXd x;
    std::vector<Eigen::MatrixXd> u;
    std::vector<Eigen::MatrixXd> v;
    std::vector<double> tau;
    int pairs() const { return static_cast<int>(tau.size()); }
};

struct ConsistencyReport {
    double max_commutator = 0.0;  // max Frobenius norm of D f - f D over samples
    double tol = 0.0;
    bool pass = false;
    double argmax_x = 0.0;
    int argmax_pair = 0;  // 0-based
    double argmax_tau = 0.0;
};

/// Sampled check of D f(x,w) = f(x,w) D over the hull.  Tolerance scales with
/// the matrix magnitudes: max(1e-12, 1e-8 (1 + |D|_F max |f|_F)).
ConsistencyReport check_consistency(const SystemSpec& spec, const HullSample& hull);

struct BlockStructure {
    std::vector<std::vector<int>> groups;  // 1-based indices, equal diagonal entries
};

/// Partition the indices of a positive diagonal D by equal entries (relative
/// tolerance 1e-12).
BlockStructure block_structure(const Eigen::MatrixXd& D);

/// True iff f(x,w) is block-diagonal for the partition at every hull sample,
/// within the same scaled tolerance as check_consistency.
bool respects_blocks(const BlockStructure& bs, const SystemSpec& spec, const HullSample& hull);

/// Ready-made specs: "scalar_diffusion", "commuting_family", "block_family",
/// "violating_family".  Throws Error on an unknown kind.
SystemSpec example_family(const std::string& kind);

/// Multiply every nonzero f and g entry by bump(R, u1^2 + ... + um^2).
SystemSpec apply_auto_cutoff(const SystemSpec& spec, double R);

/// Largest |entry| of f and g at (x,u) = (0,0) and (1,0); condition (H)
/// requires this to vanish.
double boundary_defect(const SystemSpec& spec);

}  // namespace findim::system

#endif
