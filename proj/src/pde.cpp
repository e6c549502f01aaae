#include "findim/pde.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <ostream>
#include <random>

#include "findim/error.hpp"
#include "findim/numerics.hpp"
#include "findim/spectrum.hpp"
#include "findim/util.hpp"

namespace findim::pde {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBlowUp = 1e12;

double phi1(double z) {
    if (z == 0.0) return 1.0;
    return std::expm1(z) / z;
}

double phi2(double z) {
    if (std::abs(z) < 0.1) {
        // sum z^k / (k+2)!; the direct formula cancels near zero
        double term = 0.5, acc = 0.5;
        for (int k = 1; k <= 12; ++k) {
            term *= z / (k + 2);
            acc += term;
        }
        return acc;
    }
    return (std::expm1(z) - z) / (z * z);
}

void guard(const Eigen::MatrixXd& c, double t) {
    if (!c.allFinite() || c.cwiseAbs().maxCoeff() > kBlowUp) throw BlowUp(t);
}

}  // namespace

void validate(const SolverSettings& s) {
    if (!(s.dt > 0.0)) throw ConfigError("dt must be positive");
    if (s.n_modes < 8) throw ConfigError("n_modes must be at least 8");
    if (s.dealias != 1.0 && s.dealias != 1.5) throw ConfigError("dealias factor must be 1 or 3/2");
    if (s.quad_points < 2) throw ConfigError("need at least 2 quadrature points per element");
    if (!(s.t_end >= s.dt)) throw ConfigError("t_end must cover at least one step");
    if (s.transient_cutoff < 0.0 || s.transient_cutoff >= s.t_end)
        throw ConfigError("transient_cutoff must lie in [0, t_end)");
    if (s.snapshot_every < 1) throw ConfigError("snapshot_every must be >= 1");
}

double sobolev_norm(const GalerkinState& s, double order, const Eigen::VectorXd& d) {
    if (d.size() != s.m()) throw Error("sobolev_norm: d length does not match components");
    double acc = 0.0;
    for (int j = 0; j < s.m(); ++j) {
        for (int nu = 1; nu <= s.modes(); ++nu) {
            double lam = spectrum::eigenvalue(d(j), nu);
            double w = order == 0.0 ? 1.0 : std::pow(lam, 2.0 * order);
            double c = s.c(j, nu - 1);
            acc += w * c * c;
        }
    }
    return std::sqrt(acc);
}

Eigen::MatrixXd synthesize(const GalerkinState& s, const Eigen::ArrayXd& x, int deriv) {
    int nx = static_cast<int>(x.size());
    Eigen::MatrixXd B(nx, s.modes());
    for (int nu = 1; nu <= s.modes(); ++nu) {
        double k = kPi * nu;
        for (int p = 0; p < nx; ++p) {
            // sin(pi*nu*x) vanishes at both endpoints by construction; round-off in
            // the argument must not leak a spurious boundary value
            bool end = x(p) == 0.0 || x(p) == 1.0;
            switch (deriv) {
                case 0: B(p, nu - 1) = end ? 0.0 : std::numbers::sqrt2 * std::sin(k * x(p)); break;
                case 1: B(p, nu - 1) = std::numbers::sqrt2 * k * std::cos(k * x(p)); break;
                case 2: B(p, nu - 1) = end ? 0.0 : -std::numbers::sqrt2 * k * k * std::sin(k * x(p)); break;
                default: throw Error("synthesize: derivative order must be 0, 1 or 2");
            }
        }
    }
    return s.c * B.transpose();
}

Galerkin::Galerkin(const system::SystemSpec& spec, const SolverSettings& st)
    : spec_(spec), st_(st) {
    validate(st);
    if (spec.m < 1 || spec.D.rows() != spec.m || spec.D.cols() != spec.m)
        throw Error("Galerkin: malformed spec");

    diag_ = true;
    for (int i = 0; i < spec.m && diag_; ++i)
        for (int p = 0; p < spec.m; ++p)
            if (i != p && spec.D(i, p) != 0.0) diag_ = false;
    if (diag_) {
        d_ = spec.D.diagonal();
        for (int j = 0; j < spec.m; ++j)
            if (!(d_(j) > 0.0)) throw NotPositive("diffusion coefficient is not positive");
        C_ = Eigen::MatrixXd::Identity(spec.m, spec.m);
        Cinv_ = C_;
    } else {
        auto dg = system::diagonalize(spec.D);
        d_ = dg.dbar;
        C_ = dg.C;
        Cinv_ = dg.Cinv;
    }

    zero_nl_ = true;
    for (int i = 0; i < spec.m && zero_nl_; ++i) {
        for (int p = 0; p < spec.m; ++p)
            if (!expr::is_zero(spec.f[i][p])) zero_nl_ = false;
        if (!expr::is_zero(spec.g[i])) zero_nl_ = false;
    }

    // Composite Gauss-Legendre projection grid: dealias * n_modes elements.
    int n_el = static_cast<int>(std::ceil(st.dealias * st.n_modes));
    auto gl = gauss_legendre_01(st.quad_points);
    int nq = n_el * st.quad_points;
    xq_.resize(nq);
    wq_.resize(nq);
    for (int e = 0; e < n_el; ++e) {
        for (int k = 0; k < st.quad_points; ++k) {
            xq_(e * st.quad_points + k) = (e + gl.nodes(k)) / n_el;
            wq_(e * st.quad_points + k) = gl.weights(k) / n_el;
        }
    }
    S_.resize(nq, st.n_modes);
    Sx_.resize(nq, st.n_modes);
    P_.resize(nq, st.n_modes);
    for (int nu = 1; nu <= st.n_modes; ++nu) {
        double k = kPi * nu;
        for (int p = 0; p < nq; ++p) {
            S_(p, nu - 1) = std::numbers::sqrt2 * std::sin(k * xq_(p));
            Sx_(p, nu - 1) = std::numbers::sqrt2 * k * std::cos(k * xq_(p));
            P_(p, nu - 1) = wq_(p) * S_(p, nu - 1);
        }
    }

    // Per-mode propagator and the two ETDRK2 weights, dt phi1 and dt phi2,
    // all functions of -dt pi^2 nu^2 D evaluated on the eigenvalues of D.
    prop_.resize(st.n_modes);
    phi1dt_.resize(st.n_modes);
    phi2dt_.resize(st.n_modes);
    int m = spec.m;
    for (int nu = 1; nu <= st.n_modes; ++nu) {
        Eigen::VectorXd e(m), p1(m), p2(m);
        for (int j = 0; j < m; ++j) {
            double z = -st.dt * spectrum::eigenvalue(d_(j), nu);
            e(j) = std::exp(z);
            p1(j) = st.dt * phi1(z);
            p2(j) = st.dt * phi2(z);
        }
        if (diag_) {
            prop_[nu - 1] = e.asDiagonal();
            phi1dt_[nu - 1] = p1.asDiagonal();
            phi2dt_[nu - 1] = p2.asDiagonal();
        } else {
            prop_[nu - 1] = C_ * e.asDiagonal() * Cinv_;
            phi1dt_[nu - 1] = C_ * p1.asDiagonal() * Cinv_;
            phi2dt_[nu - 1] = C_ * p2.asDiagonal() * Cinv_;
        }
    }
}

Eigen::MatrixXd Galerkin::values_on_quad(const Eigen::MatrixXd& c, bool deriv) const {
    return c * (deriv ? Sx_ : S_).transpose();
}

Eigen::MatrixXd Galerkin::nonlinear_values(const Eigen::MatrixXd& c) const {
    int m = spec_.m, nq = static_cast<int>(xq_.size());
    Eigen::MatrixXd uval = values_on_quad(c, false);
    Eigen::MatrixXd uxval = values_on_quad(c, true);
    std::vector<Eigen::ArrayXd> u(m);
    for (int j = 0; j < m; ++j) u[j] = uval.row(j).transpose().array();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, nq);
    for (int i = 0; i < m; ++i) {
        Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(nq);
        for (int p = 0; p < m; ++p) {
            if (expr::is_zero(spec_.f[i][p])) continue;
            acc += expr::eval_array(spec_.f[i][p], xq_, u) * uxval.row(p).transpose().array();
        }
        if (!expr::is_zero(spec_.g[i])) acc += expr::eval_array(spec_.g[i], xq_, u);
        out.row(i) = acc.transpose();
    }
    return out;
}

Eigen::MatrixXd Galerkin::nonlinear(const Eigen::MatrixXd& c) const {
    if (zero_nl_) return Eigen::MatrixXd::Zero(spec_.m, st_.n_modes);
    return nonlinear_values(c) * P_;
}

Eigen::MatrixXd Galerkin::vector_field(const GalerkinState& s) const {
    guard(s.c, s.t);
    Eigen::MatrixXd rate = nonlinear(s.c);
    for (int nu = 1; nu <= st_.n_modes; ++nu) {
        if (diag_) {
            for (int j = 0; j < spec_.m; ++j)
                rate(j, nu - 1) -= spectrum::eigenvalue(d_(j), nu) * s.c(j, nu - 1);
        } else {
            double k2 = (kPi * nu) * (kPi * nu);
            rate.col(nu - 1) -= k2 * (spec_.D * s.c.col(nu - 1));
        }
    }
    return rate;
}

GalerkinState Galerkin::step(const GalerkinState& s) const {
    guard(s.c, s.t);
    int N = st_.n_modes;
    Eigen::MatrixXd Nc = nonlinear(s.c);
    Eigen::MatrixXd a(spec_.m, N);
    for (int nu = 0; nu < N; ++nu)
        a.col(nu) = prop_[nu] * s.c.col(nu) + phi1dt_[nu] * Nc.col(nu);
    Eigen::MatrixXd Na = nonlinear(a);
    GalerkinState out;
    out.c.resize(spec_.m, N);
    for (int nu = 0; nu < N; ++nu)
        out.c.col(nu) = a.col(nu) + phi2dt_[nu] * (Na.col(nu) - Nc.col(nu));
    out.t = s.t + st_.dt;
    guard(out.c, out.t);
    return out;
}

TrajectorySample Galerkin::simulate(const GalerkinState& u0) const {
    if (u0.m() != spec_.m || u0.modes() != st_.n_modes)
        throw Error("simulate: state shape does not match settings");
    long steps = std::lround(std::ceil(st_.t_end / st_.dt - 1e-9));
    TrajectorySample traj;
    traj.transient_cutoff = st_.transient_cutoff;
    traj.settings = st_;
    GalerkinState s = u0;
    traj.snapshots.push_back(s);
    for (long k = 1; k <= steps; ++k) {
        s = step(s);
        s.t = u0.t + k * st_.dt;  // avoid accumulated addition error in t
        if (k % st_.snapshot_every == 0 || k == steps) traj.snapshots.push_back(s);
    }
    return traj;
}

GalerkinState Galerkin::random_state(std::uint64_t seed, double radius) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GalerkinState s;
    s.c.resize(spec_.m, st_.n_modes);
    for (int j = 0; j < spec_.m; ++j)
        for (int nu = 1; nu <= st_.n_modes; ++nu)
            s.c(j, nu - 1) = u(rng) / (static_cast<double>(nu) * nu);
    double norm = sobolev_norm(s, spec_.alpha, d_);
    s.c *= radius / norm;
    return s;
}

std::vector<TrajectorySample> Galerkin::sample_attractor(int n_traj, std::uint64_t seed) const {
    if (n_traj < 1) throw Error("sample_attractor: need n_traj >= 1");
    std::vector<std::future<TrajectorySample>> futs;
    futs.reserve(n_traj);
    for (int idx = 0; idx < n_traj; ++idx) {
        futs.push_back(std::async(std::launch::async, [this, idx, seed] {
            GalerkinState u0 = random_state(seed + 1000003ull * static_cast<std::uint64_t>(idx), 1.0);
            TrajectorySample traj = simulate(u0);
            std::erase_if(traj.snapshots, [&](const GalerkinState& s) {
                return s.t < traj.transient_cutoff;
            });
            return traj;
        }));
    }
    std::vector<TrajectorySample> out;
    out.reserve(n_traj);
    for (auto& f : futs) out.push_back(f.get());  // rethrows BlowUp in index order
    return out;
}

Galerkin::W2Report Galerkin::check_w2_bound(int n_samples, double radius, std::uint64_t seed) const {
    if (n_samples < 1) throw Error("check_w2_bound: need n_samples >= 1");
    W2Report rep;
    rep.samples = n_samples;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ur(0.05, 1.0);
    auto l2 = [&](const Eigen::MatrixXd& c) {
        if (zero_nl_) return 0.0;
        Eigen::MatrixXd vals = nonlinear_values(c);
        double acc = 0.0;
        for (int p = 0; p < vals.cols(); ++p) acc += wq_(p) * vals.col(p).squaredNorm();
        return std::sqrt(acc);
    };
    for (int k = 0; k < n_samples; ++k) {
        double rho = ur(rng);
        GalerkinState s = random_state(seed + 7919ull * static_cast<std::uint64_t>(k) + 1, rho * radius);
        rep.sup_at_radius = std::max(rep.sup_at_radius, l2(s.c));
        rep.sup_at_double = std::max(rep.sup_at_double, l2(2.0 * s.c));
    }
    return rep;
}

system::HullSample build_hull_sample(const std::vector<TrajectorySample>& trajs, int n_pairs,
                                     int nx, std::uint64_t seed) {
    if (n_pairs < 1 || nx < 3) throw Error("build_hull_sample: bad pair count or grid");
    // pool the final halves
    std::vector<const GalerkinState*> pool;
    for (const auto& tr : trajs) {
        std::size_t n = tr.snapshots.size();
        for (std::size_t k = n / 2; k < n; ++k) pool.push_back(&tr.snapshots[k]);
    }
    if (pool.empty()) throw Error("build_hull_sample: no post-transient snapshots");

    system::HullSample hull;
    hull.x = Eigen::ArrayXd::LinSpaced(nx, 0.0, 1.0);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::uniform_int_distribution<int> quarters(0, 4);
    for (int p = 0; p < n_pairs; ++p) {
        const GalerkinState* a = pool[pick(rng)];
        const GalerkinState* b = pool[pick(rng)];
        hull.u.push_back(synthesize(*a, hull.x));
        hull.v.push_back(synthesize(*b, hull.x));
        hull.tau.push_back(0.25 * quarters(rng));
    }
    return hull;
}

double limsup_norm_proxy(const TrajectorySample& traj, double order, const Eigen::VectorXd& d) {
    if (traj.snapshots.empty()) throw Error("limsup_norm_proxy: empty trajectory");
    double t0 = traj.snapshots.front().t, t1 = traj.snapshots.back().t;
    double from = t1 - 0.1 * (t1 - t0);
    double best = 0.0;
    for (const auto& s : traj.snapshots)
        if (s.t >= from) best = std::max(best, sobolev_norm(s, order, d));
    return best;
}

void write_trajectory_csv(std::ostream& os, const TrajectorySample& traj) {
    os << "t,j,nu,c\n";
    for (const auto& s : traj.snapshots)
        for (int j = 1; j <= s.m(); ++j)
            for (int nu = 1; nu <= s.modes(); ++nu)
                os << format_double(s.t) << ',' << j << ',' << nu << ','
                   << format_double(s.c(j - 1, nu - 1)) << '\n';
}

}  // namespace findim::pde
