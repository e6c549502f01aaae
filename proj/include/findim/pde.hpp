#ifndef FINDIM_PDE_HPP
#define FINDIM_PDE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "findim/system.hpp"

namespace findim::pde {

/// Coefficients w.r.t. the Dirichlet eigenbasis phi_nu(x) = sqrt(2) sin(pi nu x):
/// u_j(x) = sum_nu c(j, nu-1) phi_nu(x).  The basis enforces u(0) = u(1) = 0.
struct GalerkinState {
    Eigen::MatrixXd c;  // m x n_modes
    double t = 0.0;
    int m() const { return static_cast<int>(c.rows()); }
    int modes() const { return static_cast<int>(c.cols()); }
};

struct SolverSettings {
    int n_modes = 32;
    double dt = 1e-3;
    double t_end = 6.0;
    double transient_cutoff = 3.0;
    int quad_points = 6;    // Gauss-Legendre points per projection element
    double dealias = 1.5;   // elements per mode; 1 or 3/2
    int snapshot_every = 50;  // steps between stored snapshots
};

/// Throws ConfigError when a setting is out of range.
void validate(const SolverSettings& s);

struct TrajectorySample {
    std::vector<GalerkinState> snapshots;  // strictly increasing t
    double transient_cutoff = 0.0;
    std::uint64_t spec_hash = 0;
    SolverSettings settings;
};

/// || A^order u ||: (sum (d_j pi^2 nu^2)^(2 order) c^2)^(1/2), d the diagonal
/// of the (diagonalized) diffusion matrix.
double sobolev_norm(const GalerkinState& s, double order, const Eigen::VectorXd& d);

/// Values of u (deriv 0), u_x (1) or u_xx (2) on an arbitrary grid, as an
/// m x |x| matrix.
Eigen::MatrixXd synthesize(const GalerkinState& s, const Eigen::ArrayXd& x, int deriv = 0);

/// Sine-Galerkin discretization of du/dt = D u_xx + f(x,u) u_x + g(x,u) with
/// an ETDRK2 stepper: the stiff linear part is applied through the exact
/// per-mode propagator, the nonlinearity through second-order exponential
/// quadrature.  Immutable after construction; safe to share across threads.
class Galerkin {
  public:
    Galerkin(const system::SystemSpec& spec, const SolverSettings& st);

    /// Projection of f(x,u) u_x + g(x,u) onto the basis (m x n_modes).
    Eigen::MatrixXd nonlinear(const Eigen::MatrixXd& c) const;

    /// d/dt of the coefficients: -d_j (pi nu)^2 c + nonlinear projection.
    Eigen::MatrixXd vector_field(const GalerkinState& s) const;

    /// One ETDRK2 step of length settings().dt.  Throws BlowUp past 1e12.
    GalerkinState step(const GalerkinState& s) const;

    /// Integrate to t_end, keeping every snapshot_every-th state (plus the
    /// first and last).
    TrajectorySample simulate(const GalerkinState& u0) const;

    /// Seeded random state with nu^-2 coefficient decay, scaled to the given
    /// alpha-norm radius.
    GalerkinState random_state(std::uint64_t seed, double radius) const;

    /// n_traj trajectories from random data in the unit alpha-ball, transients
    /// discarded; trajectories run concurrently, results ordered by index.
    std::vector<TrajectorySample> sample_attractor(int n_traj, std::uint64_t seed) const;

    struct W2Report {
        double sup_at_radius = 0.0;  // sup ||f u_x + g||_L2 over the ball
        double sup_at_double = 0.0;  // same at twice the radius
        int samples = 0;
    };
    /// Boundedness probe of the nonlinearity over random states.
    W2Report check_w2_bound(int n_samples, double radius, std::uint64_t seed) const;

    const system::SystemSpec& spec() const { return spec_; }
    const SolverSettings& settings() const { return st_; }
    /// Eigenvalues of D, ascending (the diagonal itself when D is diagonal).
    const Eigen::VectorXd& d() const { return d_; }

  private:
    Eigen::MatrixXd values_on_quad(const Eigen::MatrixXd& c, bool deriv) const;
    Eigen::MatrixXd nonlinear_values(const Eigen::MatrixXd& c) const;

    system::SystemSpec spec_;
    SolverSettings st_;
    Eigen::VectorXd d_;
    Eigen::MatrixXd C_, Cinv_;  // identity when D is diagonal
    bool diag_ = false;
    bool zero_nl_ = true;
    Eigen::ArrayXd xq_, wq_;    // quadrature nodes and weights on [0,1]
    Eigen::MatrixXd S_, Sx_;    // synthesis: values = c * S^T, slopes = c * Sx^T
    Eigen::MatrixXd P_;         // projection: coef = values * P
    std::vector<Eigen::MatrixXd> prop_, phi1dt_, phi2dt_;  // per-mode m x m
};

/// Hull probe from sampled trajectories: pairs drawn from the final halves,
/// tau in {0, 1/4, 1/2, 3/4, 1}, states synthesized on an nx-point grid.
system::HullSample build_hull_sample(const std::vector<TrajectorySample>& trajs, int n_pairs,
                                     int nx, std::uint64_t seed);

/// Max alpha-norm over the last tenth of the time range (dissipativity proxy).
double limsup_norm_proxy(const TrajectorySample& traj, double order, const Eigen::VectorXd& d);

void write_trajectory_csv(std::ostream& os, const TrajectorySample& traj);

}  // namespace findim::pde

#endif
